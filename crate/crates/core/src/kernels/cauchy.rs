use std::f64::consts::PI;

use crate::error::{Error, Result};

/// The Cauchy Lévy measure `ν(dy) = dy / (π y²)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LevyMeasureCauchy;

impl LevyMeasureCauchy {
    pub fn density(&self, y: f64) -> f64 {
        if y == 0.0 {
            f64::INFINITY
        } else {
            1.0 / (PI * y * y)
        }
    }

    /// `ν(|y| > r) = 2/(π r)`.
    pub fn mass_beyond(&self, r: f64) -> f64 {
        2.0 / (PI * r)
    }
}

/// Cauchy transition density `k(y,s,x,t) = (1/π)·τ/(τ² + (x−y)²)`, `τ = t − s`.
pub fn cauchy_kernel(y: f64, s: f64, x: f64, t: f64) -> Result<f64> {
    if !(y.is_finite() && s.is_finite() && x.is_finite() && t.is_finite()) {
        return Err(Error::NonFinite("cauchy_kernel"));
    }
    if t <= s {
        return Err(Error::DegenerateTime { s, t });
    }
    Ok(cauchy_profile(t - s, x - y))
}

/// Cauchy density of scale `tau` at displacement `z` (no validation).
#[inline]
pub fn cauchy_profile(tau: f64, z: f64) -> f64 {
    tau / (PI * (tau * tau + z * z))
}

/// Mean of the Cauchy profile over `[z − h/2, z + h/2]`.
pub fn cauchy_cell_average(tau: f64, z: f64, h: f64) -> f64 {
    let a = (z - 0.5 * h) / tau;
    let b = (z + 0.5 * h) / tau;
    // atan(b) − atan(a) = atan((b − a)/(1 + ab)) while 1 + ab > 0
    let diff = if a * b > -1.0 {
        ((b - a) / (1.0 + a * b)).atan()
    } else {
        b.atan() - a.atan()
    };
    diff / (PI * h)
}

/// `∫_d^∞` of the Cauchy profile of scale `tau`.
pub fn cauchy_upper_mass(tau: f64, d: f64) -> f64 {
    crate::numerics::cauchy_sf(d, 0.0, tau)
}
