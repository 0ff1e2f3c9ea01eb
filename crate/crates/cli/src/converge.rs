use levy_bridge::schroedinger::{solve_with_options, KernelSpec};
use levy_bridge::stepsim::{convergence_report, solve_family, Probe};
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::output::Output;

/// Probe points `(y, 0) → (x, T)` for the transition-density column.
fn probes(horizon: f64) -> Vec<Probe> {
    [(0.0, 0.0), (0.0, 1.0), (1.0, -1.0), (-2.0, 0.5), (0.5, 3.0)]
        .into_iter()
        .map(|(y, x)| Probe {
            y,
            s: 0.0,
            x,
            t: horizon,
        })
        .collect()
}

/// Convergence report over `epsilon_list` in the given order; the check is
/// that every column decreases down the list up to 10% slack.
pub fn run(cfg: &ExperimentConfig, label: &str, out: &mut Output) -> anyhow::Result<()> {
    let boundary = cfg.boundary_data()?;
    let opts = cfg.solve_options();
    let reference = solve_with_options(&boundary, &KernelSpec::ExactCauchy, opts)?;
    let family = solve_family(&boundary, &cfg.epsilon_list, opts)?;
    let p_grid: Vec<f64> = (0..=20).map(|k| -5.0 + 0.5 * k as f64).collect();
    let t_grid: Vec<f64> = (0..=10).map(|k| cfg.horizon * k as f64 / 10.0).collect();
    let report = convergence_report(&reference, &family, &p_grid, &t_grid, &probes(cfg.horizon))?;
    out.csv(label, &report.to_csv())?;
    let mono = report.monotone(0.1);
    out.json(
        &format!("{label}_summary"),
        &json!({ "boundary": cfg.boundary.name(), "rows": report.rows, "monotone": mono }),
    )?;
    for (name, ok) in ["cf_sup_err", "rho_l1_sup", "p_max_err"].iter().zip(mono) {
        out.check(format!("{label} {name} monotone"), ok);
    }
    Ok(())
}
