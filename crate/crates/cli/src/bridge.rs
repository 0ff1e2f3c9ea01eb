use std::fmt::Write as _;

use anyhow::bail;
use clap::Args;
use levy_bridge::schroedinger::{
    interpolating_density, marginal_residuals, solve_with_options, KernelSpec, SolutionDocument,
};
use serde_json::json;

use crate::config::{BoundaryConfig, ExperimentConfig};
use crate::output::{tag, Output};

#[derive(Args)]
pub struct BridgeArgs {
    /// Solve on the step kernel with this cutoff instead of the exact Cauchy kernel.
    #[arg(long)]
    eps: Option<f64>,
    /// Times of the density sweep (default: 11 equispaced points on [0, T]).
    #[arg(long, value_delimiter = ',')]
    times: Vec<f64>,
}

pub fn run(cfg: &ExperimentConfig, args: &BridgeArgs, out: &mut Output) -> anyhow::Result<()> {
    let horizon = cfg.horizon;
    let times: Vec<f64> = if args.times.is_empty() {
        (0..=10).map(|k| horizon * k as f64 / 10.0).collect()
    } else {
        args.times.clone()
    };
    if let Some(t) = times.iter().find(|t| !(0.0..=horizon).contains(*t)) {
        bail!("--times: {t} lies outside [0, {horizon}]");
    }
    let (kernel, kernel_tag) = match args.eps {
        Some(epsilon) => (KernelSpec::TruncatedStep { epsilon }, format!("eps{}", tag(epsilon))),
        None => (KernelSpec::ExactCauchy, "exact".to_string()),
    };
    let label = format!("{}_{kernel_tag}", cfg.boundary.name());
    let boundary = cfg.boundary_data()?;
    let sol = solve_with_options(&boundary, &kernel, cfg.solve_options())?;
    out.json(&label, &SolutionDocument::from_solution(&sol))?;

    let grid = sol.grid();
    let mut csv = String::from("t,x,rho\n");
    for &t in &times {
        let rho = interpolating_density(&sol, t)?;
        for (x, v) in grid.points().zip(&rho.values) {
            let _ = writeln!(csv, "{t},{x},{v}");
        }
    }
    out.csv(&format!("{label}_rho"), &csv)?;

    let (r0, r_t) = marginal_residuals(&sol)?;
    let (g_lo, g_hi) = sol
        .g
        .values
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    let g_variation = (g_hi - g_lo) / g_hi;
    let mid = interpolating_density(&sol, 0.5 * horizon)?;
    let (i_max, rho_max) =
        mid.values.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |best, (i, &v)| if v > best.1 { (i, v) } else { best },
        );
    out.json(
        &format!("{label}_log"),
        &json!({
            "boundary": cfg.boundary.name(),
            "kernel": kernel,
            "iterations": sol.iterations,
            "residual": sol.residual,
            "tol_fit": cfg.tolerances.tol_fit,
            "marginal_residual_0": r0,
            "marginal_residual_T": r_t,
            "g_relative_variation": g_variation,
            "midpoint_max": rho_max,
            "midpoint_argmax": grid.point(i_max),
        }),
    )?;
    out.check(
        format!("{label} residual {:e} <= {:e}", sol.residual, cfg.tolerances.tol_fit),
        sol.residual <= cfg.tolerances.tol_fit,
    );
    if cfg.boundary == BoundaryConfig::Free && kernel == KernelSpec::ExactCauchy {
        out.check(format!("{label} g constant ({g_variation:e})"), g_variation <= 1e-8);
    }
    Ok(())
}
