use serde::{Deserialize, Serialize};

use super::potential::Potential;
use crate::error::{Error, Result};
use crate::numerics::{Grid1D, LineFn};
use crate::schroedinger::{
    solve_system, transition_density, BaseKernel, BoundaryData, KernelSpec, SchroedingerSolution, TOL_SERIES,
};

/// Which way [`evolve_theta_perturbed`] runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `θ(·,t) = K^V_{T−t} g` with `T` the last time.
    Backward,
    /// `θ*(·,t) = K^V_{t−t_0} f` with `t_0` the first time.
    Forward,
}

/// Evolves `data` under the perturbed semigroup and returns it at each of
/// `times` (increasing). Consecutive times are bridged by Strang steps of
/// length at most `dt`.
pub fn evolve_theta_perturbed(
    data: &LineFn,
    grid: Grid1D,
    base: BaseKernel,
    potential: &Potential,
    times: &[f64],
    direction: Direction,
    dt: f64,
) -> Result<Vec<LineFn>> {
    if times.is_empty() || times.windows(2).any(|w| !(w[0] < w[1])) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::param("times", "need a nonempty, strictly increasing list"));
    }
    let prop = KernelSpec::Perturbed {
        potential: potential.clone(),
        base,
        dt,
    }
    .propagator(grid, TOL_SERIES)?;
    let mut out = Vec::with_capacity(times.len());
    let mut cur = data.clone();
    match direction {
        Direction::Forward => {
            out.push(cur.clone());
            for w in times.windows(2) {
                cur = prop.propagate(&cur, w[1] - w[0])?;
                out.push(cur.clone());
            }
        }
        Direction::Backward => {
            out.push(cur.clone());
            for w in times.windows(2).rev() {
                cur = prop.propagate(&cur, w[1] - w[0])?;
                out.push(cur.clone());
            }
            out.reverse();
        }
    }
    Ok(out)
}

/// Solves the boundary problem for the kernel `k^V` built on `base`.
pub fn solve_perturbed_schroedinger(
    boundary: &BoundaryData,
    base: BaseKernel,
    potential: &Potential,
    dt: f64,
    tol_fit: f64,
    max_iter: usize,
) -> Result<SchroedingerSolution> {
    let kernel = KernelSpec::Perturbed {
        potential: potential.clone(),
        base,
        dt,
    };
    solve_system(boundary, &kernel, tol_fit, max_iter)
}

/// Transition density `k^V(y,s,x,t)θ(x,t)/θ(y,s)` of a perturbed solution.
pub fn perturbed_transition_density(solution: &SchroedingerSolution, y: f64, s: f64, x: f64, t: f64) -> Result<f64> {
    if !matches!(solution.kernel, KernelSpec::Perturbed { .. }) {
        return Err(Error::Unsupported("expected a solution on a perturbed kernel".into()));
    }
    transition_density(solution, y, s, x, t)
}
