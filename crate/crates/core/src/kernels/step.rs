use std::f64::consts::PI;

use crate::error::{require_nonnegative, require_positive, Error, Result};
use crate::kernels::jump::TruncatedJumpDensity;
use crate::numerics::{integrate, Grid1D, GridConvolver, GridFn};

/// Compound-Poisson transition kernel of the `ε`-step process after time `t`:
/// an exact atom at the origin plus a density on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StepKernel {
    pub epsilon: f64,
    pub t: f64,
    pub atom_weight: f64,
    pub ac_part: GridFn,
    /// Number of convolution powers summed.
    pub terms: usize,
}

impl StepKernel {
    pub fn rate(&self) -> f64 {
        2.0 / (PI * self.epsilon)
    }

    pub fn total_mass(&self) -> f64 {
        self.atom_weight + integrate(&self.ac_part)
    }

    /// Density part at displacement `z`; beyond the window the leading
    /// single-jump asymptote `t/(πz²)` is used.
    pub fn density(&self, z: f64) -> f64 {
        match self.ac_part.interpolate(z) {
            Some(v) => v,
            None => self.t / (PI * z * z),
        }
    }

    /// Probability of a displacement in `[a, b]` (atom included when `0 ∈ [a, b]`).
    pub fn bin_mass(&self, a: f64, b: f64) -> f64 {
        let g = self.ac_part.grid;
        let h = g.dx();
        let mut m = 0.0;
        for (i, x) in g.points().enumerate() {
            let lo = (x - 0.5 * h).max(a);
            let hi = (x + 0.5 * h).min(b);
            if hi > lo {
                m += self.ac_part.values[i] * (hi - lo);
            }
        }
        if a <= 0.0 && 0.0 <= b {
            m += self.atom_weight;
        }
        m
    }
}

/// Poisson probabilities `e^{-λ}λ^m/m!`, evaluated in log space.
fn poisson_pmf(lambda: f64, m: usize) -> f64 {
    if lambda == 0.0 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    let log_fact: f64 = (1..=m).map(|k| (k as f64).ln()).sum();
    (-lambda + m as f64 * lambda.ln() - log_fact).exp()
}

/// `k_ε(·, t) = e^{-λ}[δ_0 + Σ_{m≥1} λ^m/m! J^{*m}]`, `λ = 2t/(πε)`, where `J` is
/// the normalised jump law (cell averages of `q_ε·πε/2`). The series stops once
/// the Poisson remainder falls below `tol_series`; each convolution books the
/// mass it pushes off the window as tail mass.
///
/// The grid must contain the origin as a node.
pub fn step_kernel(epsilon: f64, t: f64, grid: Grid1D, tol_series: f64) -> Result<StepKernel> {
    require_positive("epsilon", epsilon)?;
    require_nonnegative("t", t)?;
    require_positive("tol_series", tol_series)?;
    if grid.origin_index().is_none() {
        return Err(Error::InvalidGrid("step kernel grid must contain x = 0".into()));
    }
    let lambda = 2.0 * t / (PI * epsilon);
    let atom_weight = (-lambda).exp();
    let mut ac = GridFn::zeros(grid);
    if t == 0.0 {
        return Ok(StepKernel {
            epsilon,
            t,
            atom_weight,
            ac_part: ac,
            terms: 0,
        });
    }
    let jump = TruncatedJumpDensity::new(epsilon)?.jump_law_on_grid(grid);
    let conv = GridConvolver::new(jump.clone())?;
    let mut power = jump;
    let mut cumulative = atom_weight;
    let mut m = 1;
    let cap = (lambda + 40.0 * lambda.sqrt() + 200.0) as usize;
    loop {
        let w = poisson_pmf(lambda, m);
        for (a, p) in ac.values.iter_mut().zip(&power.values) {
            *a += w * p;
        }
        ac.tail_mass += w * power.tail_mass;
        cumulative += w;
        if 1.0 - cumulative < tol_series && m as f64 >= lambda {
            break;
        }
        if m >= cap {
            return Err(Error::NotConverged {
                iterations: m,
                residual: 1.0 - cumulative,
            });
        }
        power = conv.apply(&power)?;
        m += 1;
    }
    Ok(StepKernel {
        epsilon,
        t,
        atom_weight,
        ac_part: ac,
        terms: m,
    })
}
