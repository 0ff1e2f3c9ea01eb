//! Schrödinger-interpolated Markov processes driven by Cauchy noise.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`]: uniform grids, quadrature, FFT convolution, the sine
//!   integral, reproducible random streams and Cauchy-mixture densities.
//! * [`kernels`]: the Cauchy kernel, the truncated jump density `q_ε`, the
//!   truncated generator `|∇|_ε`, compound-Poisson step kernels, characteristic
//!   functions and windowed propagators built on them.
//! * [`schroedinger`]: the Schrödinger boundary-data system, `θ`, `θ*`,
//!   interpolating densities, conditioned transition densities and Cauchy bridges.
//! * [`stepsim`]: free and conditioned step-process sample paths plus the
//!   Kolmogorov, convergence and maximal-inequality diagnostics.
//! * [`feynman_kac`]: potentials, Feynman–Kac weights, Monte-Carlo kernel
//!   estimates and the Strang-split perturbed propagator.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod error;
pub mod feynman_kac;
pub mod kernels;
pub mod numerics;
pub mod schroedinger;
pub mod stepsim;

pub use error::{Error, Result};
