use std::f64::consts::PI;
use std::fmt::Write as _;

use anyhow::bail;
use clap::Args;
use levy_bridge::kernels::{cauchy_kernel, step_kernel};
use levy_bridge::numerics::{cauchy_cdf, trapezoid};
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::output::{tag, Output};

#[derive(Args)]
pub struct KernelArgs {
    /// The exact Cauchy kernel instead of step kernels.
    #[arg(long)]
    exact: bool,
    /// Step cutoffs (default: `epsilon_list`).
    #[arg(long, value_delimiter = ',')]
    eps: Vec<f64>,
    /// Times (default: `horizon_T`).
    #[arg(long, value_delimiter = ',')]
    t: Vec<f64>,
    /// Check that each kernel has mass 1 within `tol_mass`.
    #[arg(long)]
    check_mass: bool,
}

pub fn run(cfg: &ExperimentConfig, args: &KernelArgs, out: &mut Output) -> anyhow::Result<()> {
    let times = if args.t.is_empty() {
        vec![cfg.horizon]
    } else {
        args.t.clone()
    };
    if let Some(t) = times.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        bail!("--t: times must be finite and > 0, got {t}");
    }
    let grid = cfg.grid();
    let tol = cfg.tolerances.tol_mass;
    if args.exact {
        for &t in &times {
            let mut csv = String::from("x,value\n");
            let mut vals = Vec::with_capacity(grid.n());
            for x in grid.points() {
                let v = cauchy_kernel(0.0, 0.0, x, t)?;
                vals.push(v);
                let _ = writeln!(csv, "{x},{v}");
            }
            let label = format!("exact_t{}", tag(t));
            out.csv(&label, &csv)?;
            let mass =
                trapezoid(&vals, grid.dx()) + cauchy_cdf(grid.x_min(), 0.0, t) + 1.0 - cauchy_cdf(grid.x_max(), 0.0, t);
            out.json(
                &label,
                &json!({ "t": t, "value_at_0": cauchy_kernel(0.0, 0.0, 0.0, t)?, "mass": mass }),
            )?;
            if args.check_mass {
                out.check(format!("{label} mass {mass}"), (mass - 1.0).abs() <= tol);
            }
        }
        return Ok(());
    }
    let eps = if args.eps.is_empty() {
        cfg.epsilon_list.clone()
    } else {
        args.eps.clone()
    };
    for &e in &eps {
        for &t in &times {
            let k = step_kernel(e, t, grid, cfg.tolerances.tol_series)?;
            let mut csv = String::from("x,value\n");
            for (x, v) in k.ac_part.grid.points().zip(&k.ac_part.values) {
                let _ = writeln!(csv, "{x},{v}");
            }
            let label = format!("eps{}_t{}", tag(e), tag(t));
            out.csv(&label, &csv)?;
            let mass = k.total_mass();
            out.json(
                &label,
                &json!({
                    "epsilon": e,
                    "t": t,
                    "atom_weight": k.atom_weight,
                    "atom_weight_exact": (-2.0 * t / (PI * e)).exp(),
                    "ac_mass": mass - k.atom_weight,
                    "total_mass": mass,
                    "series_terms": k.terms,
                }),
            )?;
            if args.check_mass {
                out.check(format!("{label} mass {mass}"), (mass - 1.0).abs() <= tol);
            }
        }
    }
    Ok(())
}
