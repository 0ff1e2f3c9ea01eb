//! Transition kernels of the Cauchy process and of its `ε`-step approximants.

mod cauchy;
mod charfn;
mod generator;
mod jump;
mod propagator;
mod step;

pub use cauchy::{cauchy_cell_average, cauchy_kernel, cauchy_profile, cauchy_upper_mass, LevyMeasureCauchy};
pub use charfn::{char_fn_cauchy, char_fn_step, lambda_eps, truncation_gap, CharacteristicExponent};
pub use generator::{nabla_eps_apply, nabla_eps_apply_with, Extension};
pub use jump::{q_eps, TruncatedJumpDensity};
pub use propagator::{column_mass, CauchyPropagator, Column, Propagator, StepPropagator};
pub use step::{step_kernel, StepKernel};
