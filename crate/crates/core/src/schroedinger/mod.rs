//! The Schrödinger boundary-data problem and the Markov interpolation it
//! defines.

mod boundary;
mod bridge;
mod document;
mod solver;
mod spec;


pub use boundary::{BoundaryData, TOL_MASS};
pub use bridge::bridge_density;
pub use document::{SolutionDocument, SOLUTION_SCHEMA_VERSION};
pub use solver::{
    density_mass, interpolating_density, marginal_residuals, solve_system, solve_with_options, solve_with_propagator,
    theta, theta_field, theta_star, transition_atom, transition_density, transition_row, SchroedingerSolution,
    SolveOptions, TransitionRow,
};
pub use spec::{BaseKernel, KernelSpec, TOL_SERIES};
