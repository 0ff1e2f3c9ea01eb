use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite input to {0}")]
    NonFinite(&'static str),

    #[error("degenerate time interval: s = {s}, t = {t} (need s < t)")]
    DegenerateTime { s: f64, t: f64 },

    #[error("time {t} outside [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },

    #[error("cutoff epsilon = {epsilon} is not resolvable on a grid with dx = {dx} (need epsilon >= 2 dx)")]
    UnresolvableCutoff { epsilon: f64, dx: f64 },

    #[error("solver did not converge in {iterations} iterations (last residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("non-positive value {value:e} in {context}; the grid window is probably losing mass")]
    NonPositive { context: String, value: f64 },

    #[error("time step {dt} violates stability bound; use dt <= {suggested}")]
    Stability { dt: f64, suggested: f64 },

    #[error("dominating jump rate unbounded at y = {y} ({reason})")]
    UnboundedRate { y: f64, reason: String },

    #[error(
        "window half-width {n} too small: exit bound {bound:.4} must stay below {required:.4}; enlarge the window"
    )]
    WindowTooSmall { n: f64, bound: f64, required: f64 },

    #[error("{0}")]
    Unsupported(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

/// Rejects values that are not strictly positive and finite.
pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive and finite, got {value}")))
    }
}

pub(crate) fn require_nonnegative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::param(
            name,
            format!("must be non-negative and finite, got {value}"),
        ))
    }
}
