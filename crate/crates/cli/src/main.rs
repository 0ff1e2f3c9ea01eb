//! `levy-bridge`: experiments on Cauchy-noise Schrödinger interpolation,
//! step-process approximants and Feynman–Kac perturbations.

mod bridge;
mod config;
mod converge;
mod fk;
mod kernel;
mod output;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use config::ExperimentConfig;
use output::Output;

#[derive(Parser)]
#[command(
    name = "levy-bridge",
    version,
    about = "Schrödinger interpolation driven by Cauchy noise: kernels, bridges, step-process simulation and Feynman–Kac checks",
    after_help = "Every command writes <command>_<label>.csv|json into the output directory and exits with 0 \
                  iff all requested checks pass, 1 if a check fails and 2 on errors.\n\n\
                  Environment:\n  LEVY_BRIDGE_THREADS  maximum number of worker threads"
)]
struct Cli {
    /// JSON experiment config; omitted fields take their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Random seed (overrides `mc.seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Only report errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact Cauchy and step-kernel profiles with atom weights.
    Kernel(kernel::KernelArgs),
    /// Solve the Schrödinger system for the configured boundary pair.
    Bridge(bridge::BridgeArgs),
    /// Free, conditioned and maximal-inequality simulations of the step process.
    Simulate(simulate::SimulateArgs),
    /// Feynman–Kac kernel estimates and checks.
    Fk(fk::FkArgs),
    /// Convergence of step interpolations to the Cauchy one over `epsilon_list`.
    Converge,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Kernel(_) => "kernel",
            Command::Bridge(_) => "bridge",
            Command::Simulate(_) => "simulate",
            Command::Fk(_) => "fk",
            Command::Converge => "converge",
        }
    }
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var("LEVY_BRIDGE_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("LEVY_BRIDGE_THREADS must be a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    configure_threads()?;
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.mc.seed = seed;
    }
    if let Some(dir) = &cli.out {
        cfg.output_dir = dir.clone();
    }
    cfg.validate()?;
    let mut out = Output::new(&cfg.output_dir, cli.command.name(), cfg.mc.seed, cli.quiet)?;
    match &cli.command {
        Command::Kernel(a) => kernel::run(&cfg, a, &mut out)?,
        Command::Bridge(a) => bridge::run(&cfg, a, &mut out)?,
        Command::Simulate(a) => simulate::run(&cfg, a, &mut out)?,
        Command::Fk(a) => fk::run(&cfg, a, &mut out)?,
        Command::Converge => converge::run(&cfg, "report", &mut out)?,
    }
    Ok(out.all_pass())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
