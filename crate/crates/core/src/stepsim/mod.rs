//! Step-process simulation and diagnostics.

mod conditioned;
mod diagnostics;
mod histogram;
mod maximal;
mod mc;
mod path;

pub use conditioned::{jump_intensity_density, sample_conditioned_path, JumpIntensity, ThetaTable};
pub use diagnostics::{
    convergence_report, kolmogorov_residual, solve_family, transition_mass, ConvergenceReport, ConvergenceRow,
    KolmogorovResidual, Probe,
};
pub use histogram::Histogram;
pub use maximal::{maximal_bound, maximal_inequality_check, MaximalReport, MaximalRow};
pub use mc::{
    conditioned_occupation, conditioned_snapshots, free_terminal_displacements, jump_count_estimate, MeanEstimate,
};
pub(crate) use path::walk_free;
pub use path::{sample_free_path, StepPath};
