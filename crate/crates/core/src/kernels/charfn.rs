use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{require_nonnegative, require_positive, Result};
use crate::numerics::si;

/// Characteristic exponent of the free process in force.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CharacteristicExponent {
    /// `F(p) = |p|`.
    ExactCauchy,
    /// `λ_ε(p) = q̂_ε(0) − q̂_ε(p)`.
    Truncated { epsilon: f64 },
}

impl CharacteristicExponent {
    pub fn eval(&self, p: f64) -> f64 {
        match *self {
            CharacteristicExponent::ExactCauchy => p.abs(),
            CharacteristicExponent::Truncated { epsilon } => truncated_exponent(epsilon, p),
        }
    }
}

/// `λ_ε(p) = (2/π)[(1 − cos pε)/ε + |p|(π/2 − Si(|p|ε))]`, the closed form of
/// `(2/π)∫_ε^∞ (1 − cos px)/x² dx`.
pub(crate) fn truncated_exponent(epsilon: f64, p: f64) -> f64 {
    let a = p.abs();
    let s = (0.5 * a * epsilon).sin();
    let one_minus_cos = 2.0 * s * s;
    (2.0 / PI) * (one_minus_cos / epsilon + a * (FRAC_PI_2 - si(a * epsilon)))
}

pub fn lambda_eps(epsilon: f64, p: f64) -> Result<f64> {
    require_positive("epsilon", epsilon)?;
    Ok(truncated_exponent(epsilon, p))
}

/// Characteristic function of the step process, `exp(−t·λ_ε(p))`.
pub fn char_fn_step(epsilon: f64, p: f64, t: f64) -> Result<f64> {
    require_positive("epsilon", epsilon)?;
    require_nonnegative("t", t)?;
    Ok((-t * truncated_exponent(epsilon, p)).exp())
}

/// Cauchy characteristic function `exp(−t|p|)`.
pub fn char_fn_cauchy(p: f64, t: f64) -> Result<f64> {
    require_nonnegative("t", t)?;
    Ok((-t * p.abs()).exp())
}

/// `(2t/π)∫_0^ε (1 − cos px)/x² dx`, the exponent gap between the Cauchy and
/// truncated characteristic functions, with its bound `(t/π)p²ε`.
pub fn truncation_gap(epsilon: f64, p: f64, t: f64) -> (f64, f64) {
    let gap = t * (p.abs() - truncated_exponent(epsilon, p));
    (gap, t * p * p * epsilon / PI)
}
