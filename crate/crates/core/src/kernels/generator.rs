use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{require_positive, Error, Result};
use crate::numerics::GridFn;

/// How `f` is continued beyond the grid window inside the singular integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Extension {
    /// Constant continuation by the boundary values.
    #[default]
    Boundary,
    /// Zero outside the window.
    Zero,
}

/// Truncated generator `|∇|_ε f(x) = −(1/π)∫_{|y|>ε}[f(x+y) − f(x)] dy/y²`
/// with boundary-value extension.
pub fn nabla_eps_apply(epsilon: f64, f: &GridFn) -> Result<GridFn> {
    nabla_eps_apply_with(epsilon, f, Extension::Boundary)
}

/// [`nabla_eps_apply`] with an explicit extension.
///
/// `f` is integrated as its piecewise-linear interpolant against `1/y²`
/// (product integration), so the quadrature reproduces the mass `2/ε` of
/// `1/y²` on `|y| > ε` exactly and constants are annihilated.
pub fn nabla_eps_apply_with(epsilon: f64, f: &GridFn, ext: Extension) -> Result<GridFn> {
    require_positive("epsilon", epsilon)?;
    let grid = f.grid;
    let h = grid.dx();
    if epsilon < 2.0 * h {
        return Err(Error::UnresolvableCutoff { epsilon, dx: h });
    }
    let n = grid.n();
    // cell [kh, (k+1)h] clipped to [ε, ∞): weights on nodes k and k+1
    let mut lo = vec![0.0; n];
    let mut hi = vec![0.0; n];
    for k in 0..n - 1 {
        let b = (k + 1) as f64 * h;
        if b <= epsilon {
            continue;
        }
        let a = (k as f64 * h).max(epsilon);
        let inv = 1.0 / a - 1.0 / b;
        let log = (b / a).ln();
        lo[k] = ((k + 1) as f64 * h * inv - log) / h;
        hi[k] = (log - k as f64 * h * inv) / h;
    }
    let (left_ext, right_ext) = match ext {
        Extension::Boundary => (f.values[0], f.values[n - 1]),
        Extension::Zero => (0.0, 0.0),
    };
    let v = &f.values;
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let kr = n - 1 - i;
            let kl = i;
            let mut s = 0.0;
            for k in 0..kr {
                s += lo[k] * v[i + k] + hi[k] * v[i + k + 1];
            }
            for k in 0..kl {
                s += lo[k] * v[i - k] + hi[k] * v[i - k - 1];
            }
            s += right_ext / epsilon.max(kr as f64 * h);
            s += left_ext / epsilon.max(kl as f64 * h);
            (2.0 / epsilon * v[i] - s) / PI
        })
        .collect();
    Ok(GridFn {
        grid,
        values,
        tail_mass: 0.0,
    })
}
