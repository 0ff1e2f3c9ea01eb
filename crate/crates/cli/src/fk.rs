use std::f64::consts::PI;
use std::fmt::Write as _;

use anyhow::{bail, Context};
use clap::Args;
use levy_bridge::feynman_kac::{
    fk_kernel_grid, fk_kernel_mc, fk_lower_bound_check, fk_symmetry_check, solve_perturbed_schroedinger, Potential,
};
use levy_bridge::kernels::{step_kernel, StepKernel};
use levy_bridge::numerics::{Grid1D, GridFn, RandomStream};
use levy_bridge::schroedinger::{BaseKernel, SolutionDocument};
use serde_json::json;

use crate::config::{ExperimentConfig, PotentialConfig};
use crate::output::{tag, Output};

#[derive(Args)]
pub struct FkArgs {
    /// Potential preset such as const:0.7, box:-1,1,1 or harmonic:4 (overrides the config).
    #[arg(long, allow_hyphen_values = true)]
    potential: Option<String>,
    /// Step cutoff of the underlying process.
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    /// Starting point.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    x: f64,
    /// Time (default: `horizon_T`).
    #[arg(long)]
    t: Option<f64>,
    /// Number of paths (overrides `mc.n_paths`).
    #[arg(long)]
    paths: Option<usize>,
    /// Bins: lo,hi,count.
    #[arg(long, value_delimiter = ',', default_value = "-3,3,12", allow_hyphen_values = true)]
    bins: Vec<f64>,
    /// Check the floor ½e^{-c_n t}k_t bin by bin.
    #[arg(long)]
    lower_bound: bool,
    /// Window half-width n for the floor (default: smallest adequate).
    #[arg(long)]
    window: Option<f64>,
    /// Check symmetry with indicator test functions.
    #[arg(long)]
    symmetry: bool,
    /// Support a,b of the first test function.
    #[arg(long, value_delimiter = ',', default_value = "0,1", allow_hyphen_values = true)]
    f_support: Vec<f64>,
    /// Support a,b of the second test function.
    #[arg(long, value_delimiter = ',', default_value = "2,3", allow_hyphen_values = true)]
    g_support: Vec<f64>,
    /// Cross-check the Monte-Carlo bins against the Strang-split grid kernel.
    #[arg(long)]
    grid_check: bool,
    /// Strang step (default: min(0.02, 0.25/(2/(πε) + sup V))).
    #[arg(long)]
    dt: Option<f64>,
    /// Also solve the perturbed Schrödinger system for the configured boundary pair.
    #[arg(long)]
    bridge: bool,
}

const MC_STREAM: u64 = 20;
const LOWER_STREAM: u64 = 21;
const SYMMETRY_STREAM: u64 = 22;

fn bin_edges(spec: &[f64]) -> anyhow::Result<Vec<f64>> {
    match spec {
        [lo, hi, n] if lo < hi && *n >= 1.0 && n.fract() == 0.0 => {
            let n = *n as usize;
            Ok((0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect())
        }
        _ => bail!("--bins: expected lo,hi,count with lo < hi"),
    }
}

/// Kernel mass of `[a, b)`, matching the binning of the estimates.
fn half_open_mass(k: &StepKernel, a: f64, b: f64) -> f64 {
    let m = k.bin_mass(a, b);
    if b == 0.0 {
        m - k.atom_weight
    } else {
        m
    }
}

fn indicator(grid: Grid1D, support: &[f64], flag: &str) -> anyhow::Result<GridFn> {
    let [a, b] = support else {
        bail!("--{flag}: expected a,b");
    };
    let v = grid
        .points()
        .map(|x| if (*a..=*b).contains(&x) { 1.0 } else { 0.0 })
        .collect();
    Ok(GridFn::new(grid, v, 0.0)?)
}

pub fn run(cfg: &ExperimentConfig, args: &FkArgs, out: &mut Output) -> anyhow::Result<()> {
    let potential: Potential = match (&args.potential, &cfg.potential) {
        (Some(s), _) => PotentialConfig::Preset(s.clone()).resolve().context("--potential")?,
        (None, Some(p)) => p.resolve()?,
        (None, None) => bail!("fk needs a potential: pass --potential or set `potential` in the config"),
    };
    let (eps, x) = (args.eps, args.x);
    let t = args.t.unwrap_or(cfg.horizon);
    let n_paths = args.paths.unwrap_or(cfg.mc.n_paths);
    let edges = bin_edges(&args.bins)?;
    let seed = cfg.mc.seed;
    let label = format!("{}_eps{}", tag(&potential), tag(eps));

    let est = fk_kernel_mc(
        eps,
        x,
        t,
        &potential,
        &edges,
        n_paths,
        RandomStream::new(seed, MC_STREAM),
    )?;
    out.csv(&label, &est.to_csv())?;
    out.json(&label, &json!({ "potential": potential, "estimate": est }))?;
    if let Potential::Constant { c } = potential {
        let target = (-c * t).exp();
        out.check(
            format!("{label} total mass {} vs e^(-ct) = {target}", est.total_mean),
            (est.total_mean - target).abs() <= 3.0 * est.total_stderr + 1e-12,
        );
        // bin masses against the free step kernel, discounted by e^{-ct}
        let reach = edges[0].abs().max(edges[edges.len() - 1].abs()) + x.abs() + 10.0;
        let k = step_kernel(
            eps,
            t,
            Grid1D::symmetric(reach, (eps / 4.0).min(0.01))?,
            cfg.tolerances.tol_series,
        )?;
        let worst = edges
            .windows(2)
            .zip(est.weights_mean.iter().zip(&est.weights_stderr))
            .map(|(w, (m, s))| (m - target * half_open_mass(&k, w[0] - x, w[1] - x)).abs() - 3.0 * s)
            .fold(f64::NEG_INFINITY, f64::max);
        out.check(format!("{label} bins match e^(-ct)k_t within 3σ"), worst <= 1e-5);
    }

    if args.lower_bound {
        let report = fk_lower_bound_check(
            eps,
            x,
            &edges,
            t,
            &potential,
            args.window,
            n_paths,
            RandomStream::new(seed, LOWER_STREAM),
        )?;
        out.csv(&format!("{label}_lower_bound"), &report.to_csv())?;
        out.check(
            format!(
                "{label} floor (n = {}, c_n = {}) holds in every bin",
                report.n, report.c_n
            ),
            report.all_pass(),
        );
    }

    let grid = cfg.grid();
    if args.symmetry {
        let f = indicator(grid, &args.f_support, "f-support")?;
        let g = indicator(grid, &args.g_support, "g-support")?;
        let r = fk_symmetry_check(
            eps,
            t,
            &potential,
            &f,
            &g,
            n_paths,
            RandomStream::new(seed, SYMMETRY_STREAM),
        )?;
        out.json(&format!("{label}_symmetry"), &r)?;
        out.check(
            format!("{label} symmetry |{} - {}| <= 3·{:e}", r.lhs, r.rhs, r.stderr),
            r.passes(3.0),
        );
    }

    let dt = match args.dt {
        Some(dt) => dt,
        None => {
            let sup_v = potential.sup_on(grid.x_min(), grid.x_max());
            (0.25 / (2.0 / (PI * eps) + sup_v)).min(0.02)
        }
    };
    if args.grid_check {
        let coarse = fk_kernel_grid(eps, x, t, &potential, &edges, grid, dt)?;
        let fine = fk_kernel_grid(eps, x, t, &potential, &edges, grid, 0.5 * dt)?;
        let mut csv = String::from("bin_lo,bin_hi,mc_mean,mc_stderr,grid,bias_bound,pass\n");
        let mut all = true;
        for (k, w) in edges.windows(2).enumerate() {
            let bias = 4.0 / 3.0 * (coarse[k] - fine[k]).abs();
            let (m, s) = (est.weights_mean[k], est.weights_stderr[k]);
            let pass = (m - fine[k]).abs() <= 3.0 * s + bias;
            all &= pass;
            let _ = writeln!(csv, "{},{},{m},{s:e},{},{bias:e},{pass}", w[0], w[1], fine[k]);
        }
        out.csv(&format!("{label}_grid"), &csv)?;
        out.check(
            format!("{label} grid splitting (dt = {}) agrees with MC", 0.5 * dt),
            all,
        );
    }

    if args.bridge {
        let boundary = cfg.boundary_data()?;
        let sol = solve_perturbed_schroedinger(
            &boundary,
            BaseKernel::TruncatedStep { epsilon: eps },
            &potential,
            dt,
            cfg.tolerances.tol_fit,
            cfg.max_iter,
        )?;
        out.json(&format!("{label}_bridge"), &SolutionDocument::from_solution(&sol))?;
        out.check(
            format!("{label} perturbed bridge residual {:e}", sol.residual),
            sol.residual <= cfg.tolerances.tol_fit,
        );
    }
    Ok(())
}
