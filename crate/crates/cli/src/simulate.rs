use std::f64::consts::PI;
use std::fmt::Write as _;

use anyhow::{bail, Context};
use clap::Args;
use levy_bridge::kernels::step_kernel;
use levy_bridge::numerics::{Grid1D, RandomStream};
use levy_bridge::schroedinger::{interpolating_density, solve_with_options, KernelSpec};
use levy_bridge::stepsim::{
    conditioned_occupation, free_terminal_displacements, jump_count_estimate, maximal_inequality_check,
    sample_conditioned_path, sample_free_path, transition_mass, Histogram, JumpIntensity, StepPath,
};
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::converge;
use crate::output::{tag, Output};

#[derive(Args)]
#[command(group(clap::ArgGroup::new("mode").multiple(false)))]
pub struct SimulateArgs {
    /// Free step process: jump counts and terminal law (the default).
    #[arg(long, group = "mode")]
    free: bool,
    /// Conditioned step process for the configured boundary pair.
    #[arg(long, group = "mode")]
    conditioned: bool,
    /// Maximal-inequality table for n in {3, 10, 30, 100}.
    #[arg(long, group = "mode")]
    maximal: bool,
    /// Convergence report over `epsilon_list`.
    #[arg(long, group = "mode")]
    converge: bool,
    /// Step cutoff (default: the last entry of `epsilon_list`).
    #[arg(long)]
    eps: Option<f64>,
    /// Number of paths (overrides `mc.n_paths`).
    #[arg(long)]
    paths: Option<usize>,
    /// Time horizon (default: `horizon_T`).
    #[arg(long)]
    t: Option<f64>,
    /// Sample paths written out in full.
    #[arg(long, default_value_t = 5)]
    keep: usize,
    /// Histogram window and bin count: lo,hi,bins.
    #[arg(long, value_delimiter = ',', default_value = "-8,8,100", allow_hyphen_values = true)]
    hist: Vec<f64>,
}

const FREE_STREAM: u64 = 1;
const CONDITIONED_STREAM: u64 = 2;
const MAXIMAL_STREAM: u64 = 3;

fn histogram(spec: &[f64]) -> anyhow::Result<Histogram> {
    match spec {
        [lo, hi, bins] if *bins >= 1.0 && bins.fract() == 0.0 => Ok(Histogram::new(*lo, *hi, *bins as usize)?),
        _ => bail!("--hist: expected lo,hi,bins"),
    }
}

fn paths_csv(paths: &[StepPath]) -> String {
    let mut s = String::from("path,time,state\n");
    for (i, p) in paths.iter().enumerate() {
        let _ = writeln!(s, "{i},{},{}", p.t_start, p.x0);
        for (t, x) in p.jump_times.iter().zip(&p.states) {
            let _ = writeln!(s, "{i},{t},{x}");
        }
    }
    s
}

pub fn run(cfg: &ExperimentConfig, args: &SimulateArgs, out: &mut Output) -> anyhow::Result<()> {
    if args.converge {
        return converge::run(cfg, "converge", out);
    }
    let eps = args.eps.unwrap_or(*cfg.epsilon_list.last().expect("validated"));
    let n_paths = args.paths.unwrap_or(cfg.mc.n_paths);
    let t = args.t.unwrap_or(cfg.horizon);
    if n_paths == 0 {
        bail!("--paths: need at least one path");
    }
    let seed = cfg.mc.seed;
    if args.maximal {
        let stream = RandomStream::new(seed, MAXIMAL_STREAM);
        let report = maximal_inequality_check(&[3.0, 10.0, 30.0, 100.0], t, eps, n_paths, stream)?;
        let label = format!("maximal_eps{}", tag(eps));
        out.csv(&label, &report.to_csv())?;
        for r in &report.rows {
            out.check(format!("{label} n={} {} <= {} + 3σ", r.n, r.empirical, r.bound), r.pass);
        }
        return Ok(());
    }
    let hist = histogram(&args.hist)?;
    if args.conditioned {
        return conditioned(cfg, eps, t, n_paths, hist, args.keep, out);
    }

    let stream = RandomStream::new(seed, FREE_STREAM);
    let label = format!("free_eps{}", tag(eps));
    let count = jump_count_estimate(eps, t, n_paths, stream.fork(1))?;
    let expected = 2.0 * t / (PI * eps);
    let ends = free_terminal_displacements(eps, t, n_paths, stream.fork(2))?;
    let mut h = hist.clone();
    ends.iter().for_each(|&x| h.add(x));
    let reach = h.lo.abs().max(h.hi.abs()) + 10.0;
    let dx = (eps / 4.0).min(h.width() / 4.0);
    let k = step_kernel(eps, t, Grid1D::symmetric(reach, dx)?, cfg.tolerances.tol_series)?;
    let cdf = |x: f64| 0.5 * k.ac_part.tail_mass + k.bin_mass(f64::NEG_INFINITY, x);
    let masses = h.masses_from_cdf(cdf);
    let l1 = h.l1_distance(&masses)?;
    out.csv(&format!("{label}_hist"), &h.to_csv(&masses))?;
    let keep: Vec<StepPath> = (0..args.keep as u64)
        .map(|i| sample_free_path(eps, 0.0, (0.0, t), stream.fork(3).path(i)))
        .collect::<Result<_, _>>()?;
    out.csv(&format!("{label}_paths"), &paths_csv(&keep))?;
    let pass = (count.mean - expected).abs() <= 3.0 * count.stderr;
    out.json(
        &label,
        &json!({
            "epsilon": eps, "t": t, "n_paths": n_paths,
            "jump_count_mean": count.mean, "jump_count_stderr": count.stderr,
            "jump_count_expected": expected, "terminal_l1": l1,
        }),
    )?;
    out.check(
        format!("{label} jump count {} vs {expected} within 3σ", count.mean),
        pass,
    );
    Ok(())
}

fn conditioned(
    cfg: &ExperimentConfig,
    eps: f64,
    t: f64,
    n_paths: usize,
    hist: Histogram,
    keep: usize,
    out: &mut Output,
) -> anyhow::Result<()> {
    if !(t > 0.0 && t <= cfg.horizon) {
        bail!("--t: conditioned runs need 0 < t <= horizon_T = {}", cfg.horizon);
    }
    let boundary = cfg.boundary_data()?;
    let start = boundary
        .rho0_mixture
        .clone()
        .context("conditioned runs need a boundary given by Cauchy mixtures")?;
    let sol = solve_with_options(
        &boundary,
        &KernelSpec::TruncatedStep { epsilon: eps },
        cfg.solve_options(),
    )?;
    let intensity = JumpIntensity::from_solution(&sol, 101)?;
    let stream = RandomStream::new(cfg.mc.seed, CONDITIONED_STREAM);
    let label = format!("conditioned_{}_eps{}", cfg.boundary.name(), tag(eps));

    let occ = conditioned_occupation(&intensity, &start, t, &hist, n_paths, stream.fork(1))?;
    let expected = occ.masses_from_density(&interpolating_density(&sol, t)?);
    let l1 = occ.l1_distance(&expected)?;
    out.csv(&format!("{label}_hist"), &occ.to_csv(&expected))?;

    let path_stream = stream.fork(2);
    let mut paths = Vec::with_capacity(keep);
    for i in 0..keep as u64 {
        let s = path_stream.path(i);
        let x0 = start.sample(&mut s.fork(0).rng());
        paths.push(sample_conditioned_path(&intensity, x0, (0.0, cfg.horizon), s)?);
    }
    out.csv(&format!("{label}_paths"), &paths_csv(&paths))?;

    let mass = transition_mass(&sol, 0.0, 0.0, 0.5 * cfg.horizon)?;
    out.json(
        &label,
        &json!({
            "epsilon": eps, "t": t, "n_paths": n_paths,
            "occupation_l1": l1, "transition_mass": mass,
            "solver_residual": sol.residual, "solver_iterations": sol.iterations,
        }),
    )?;
    out.check(format!("{label} occupation L1 {l1:.4} <= 0.05"), l1 <= 0.05);
    out.check(
        format!("{label} transition mass {mass}"),
        (mass - 1.0).abs() <= cfg.tolerances.tol_mass,
    );
    Ok(())
}
