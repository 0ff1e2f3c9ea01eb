use crate::error::{Error, Result};
use crate::kernels::cauchy_profile;

/// Cauchy bridge pinned at `(y0, t0)` and `(z_t, horizon)`:
/// `ρ(x,t) = k(y0,t0,x,t)k(x,t,z_T,T)/k(y0,t0,z_T,T)`.
pub fn bridge_density(y0: f64, t0: f64, z_t: f64, horizon: f64, x: f64, t: f64) -> Result<f64> {
    if !(t0 < t && t < horizon) {
        return Err(Error::param(
            "t",
            format!("bridge times must satisfy t0 < t < T, got {t0}, {t}, {horizon}"),
        ));
    }
    if ![y0, t0, z_t, horizon, x, t].iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("bridge_density"));
    }
    Ok(cauchy_profile(t - t0, x - y0) * cauchy_profile(horizon - t, z_t - x) / cauchy_profile(horizon - t0, z_t - y0))
}
