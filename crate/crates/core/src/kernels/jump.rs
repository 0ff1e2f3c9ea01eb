use std::f64::consts::PI;

use crate::error::{require_positive, Result};
use crate::numerics::{Grid1D, GridFn};

/// The Cauchy Lévy density with jumps of size `|x| ≤ ε` removed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedJumpDensity {
    epsilon: f64,
}

impl TruncatedJumpDensity {
    pub fn new(epsilon: f64) -> Result<Self> {
        require_positive("epsilon", epsilon)?;
        Ok(Self { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn density(&self, x: f64) -> f64 {
        if x.abs() > self.epsilon {
            1.0 / (PI * x * x)
        } else {
            0.0
        }
    }

    /// Total mass `2/(πε)`, the jump rate of the step process.
    pub fn total_mass(&self) -> f64 {
        2.0 / (PI * self.epsilon)
    }

    /// Probability that a normalised jump lands in `[a, b]`.
    pub fn jump_probability(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        // CDF of |J| restricted to one side: P(0 < J ≤ x) = ½(1 − ε/x) for x ≥ ε.
        let half = |x: f64| {
            if x <= self.epsilon {
                0.0
            } else {
                0.5 * (1.0 - self.epsilon / x)
            }
        };
        let signed = |x: f64| if x >= 0.0 { half(x) } else { -half(-x) };
        signed(b) - signed(a)
    }

    /// Cell averages of the normalised jump law `q_ε/(2/(πε))` on `grid`,
    /// with the uncovered probability booked as tail mass.
    pub fn jump_law_on_grid(&self, grid: Grid1D) -> GridFn {
        let h = grid.dx();
        let values: Vec<f64> = grid
            .points()
            .map(|x| self.jump_probability(x - 0.5 * h, x + 0.5 * h) / h)
            .collect();
        let mut f = GridFn {
            grid,
            values,
            tail_mass: 0.0,
        };
        f.tail_mass = (1.0 - f.window_integral()).max(0.0);
        f
    }
}

/// `q_ε(x) = 1/(πx²)` for `|x| > ε`, zero inside the cutoff.
pub fn q_eps(epsilon: f64, x: f64) -> Result<f64> {
    Ok(TruncatedJumpDensity::new(epsilon)?.density(x))
}
