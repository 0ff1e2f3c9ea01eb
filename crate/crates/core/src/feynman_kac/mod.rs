//! Feynman–Kac perturbations of the free semigroups by bounded potentials.

mod mc;
mod perturbed;
mod potential;
mod strang;

pub use mc::{
    fk_kernel_grid, fk_kernel_mc, fk_lower_bound_check, fk_symmetry_check, path_fk_weight, FKKernelEstimate,
    LowerBoundReport, LowerBoundRow, SymmetryCheck,
};
pub use perturbed::{evolve_theta_perturbed, perturbed_transition_density, solve_perturbed_schroedinger, Direction};
pub use potential::Potential;
pub use strang::StrangPropagator;
