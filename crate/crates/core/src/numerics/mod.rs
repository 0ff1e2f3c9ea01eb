//! Shared numerical substrate: grids, quadrature, convolution, special
//! functions and reproducible random streams.

mod conv;
mod density;
mod grid;
mod line;
pub mod quad;
mod rng;
mod special;

pub use conv::{
    convolve, convolve_direct, direct_linear_convolution, linear_convolution, GridConvolver, OffsetConvolver,
};
pub use density::{cauchy_cdf, cauchy_pdf, cauchy_sf, CauchyComponent, CauchyMixture};
pub use grid::{integrate, trapezoid, Grid1D, GridFn, GridSpec};
pub use line::{LineFn, Side, Tail, TailShape};
pub use rng::{map_chunks, RandomStream, MC_CHUNK};
pub(crate) use special::si;
pub use special::sine_integral;
