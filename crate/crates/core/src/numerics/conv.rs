use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::grid::{trapezoid, GridFn};
use crate::error::{Error, Result};

/// Full linear convolution `c[m] = Σ_j a[j]·b[m-j]`, length `a.len()+b.len()-1`.
pub fn linear_convolution(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    if a.len().min(b.len()) <= 32 {
        return direct_linear_convolution(a, b);
    }
    let plan = FftPlan::new(a.len() + b.len() - 1);
    let fa = plan.forward(a);
    let fb = plan.forward(b);
    let prod: Vec<Complex64> = fa.iter().zip(&fb).map(|(x, y)| x * y).collect();
    plan.inverse(prod, a.len() + b.len() - 1)
}

pub fn direct_linear_convolution(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

struct FftPlan {
    size: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl FftPlan {
    fn new(min_len: usize) -> Self {
        let size = min_len.next_power_of_two();
        let mut planner = FftPlanner::new();
        Self {
            size,
            fwd: planner.plan_fft_forward(size),
            inv: planner.plan_fft_inverse(size),
        }
    }

    fn forward(&self, x: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        buf.resize(self.size, Complex64::new(0.0, 0.0));
        self.fwd.process(&mut buf);
        buf
    }

    fn inverse(&self, mut buf: Vec<Complex64>, len: usize) -> Vec<f64> {
        self.inv.process(&mut buf);
        let scale = 1.0 / self.size as f64;
        buf.iter().take(len).map(|c| c.re * scale).collect()
    }
}

/// Repeated convolution against one fixed kernel sampled on offsets
/// `-(half)…(half)` (length `2·half+1`, centre at index `half`).
///
/// `apply(u)[i] = Σ_j kernel[i - j + half]·u[j]` for an input of length `n`
/// with `half ≥ n - 1`.
pub struct OffsetConvolver {
    half: usize,
    n: usize,
    plan: FftPlan,
    kernel_hat: Vec<Complex64>,
}

impl OffsetConvolver {
    pub fn new(kernel: &[f64], n: usize) -> Result<Self> {
        if kernel.len() % 2 != 1 {
            return Err(Error::param("kernel", "offset kernel must have odd length"));
        }
        let half = kernel.len() / 2;
        if half + 1 < n {
            return Err(Error::param("kernel", "offset kernel shorter than the grid"));
        }
        let plan = FftPlan::new(kernel.len() + n - 1);
        let kernel_hat = plan.forward(kernel);
        Ok(Self {
            half,
            n,
            plan,
            kernel_hat,
        })
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        debug_assert_eq!(u.len(), self.n);
        let uh = self.plan.forward(u);
        let prod: Vec<Complex64> = uh.iter().zip(&self.kernel_hat).map(|(a, b)| a * b).collect();
        let full = self.plan.inverse(prod, self.half + self.n);
        full[self.half..self.half + self.n].to_vec()
    }
}

/// [`convolve`] against one fixed grid function, with its FFT cached.
pub struct GridConvolver {
    kernel: GridFn,
    origin: usize,
    plan: FftPlan,
    kernel_hat: Vec<Complex64>,
}

impl GridConvolver {
    pub fn new(kernel: GridFn) -> Result<Self> {
        let origin = aligned_origin(&kernel)?;
        let plan = FftPlan::new(2 * kernel.values.len() - 1);
        let kernel_hat = plan.forward(&kernel.values);
        Ok(Self {
            kernel,
            origin,
            plan,
            kernel_hat,
        })
    }

    pub fn apply(&self, u: &GridFn) -> Result<GridFn> {
        self.kernel.grid.check_same(&u.grid)?;
        let n = u.values.len();
        let uh = self.plan.forward(&u.values);
        let prod: Vec<Complex64> = uh.iter().zip(&self.kernel_hat).map(|(a, b)| a * b).collect();
        let full = self.plan.inverse(prod, 2 * n - 1);
        Ok(assemble(u, &self.kernel, full, self.origin))
    }
}

fn aligned_origin(f: &GridFn) -> Result<usize> {
    f.grid
        .origin_index()
        .ok_or_else(|| Error::InvalidGrid("convolution needs a grid that contains x = 0 as a grid point".into()))
}

fn assemble(f: &GridFn, g: &GridFn, full: Vec<f64>, origin: usize) -> GridFn {
    let n = f.grid.n();
    let dx = f.grid.dx();
    let values: Vec<f64> = (0..n).map(|i| dx * full[i + origin]).collect();
    let mass_f = super::grid::integrate(f);
    let mass_g = super::grid::integrate(g);
    // Mass bookkeeping: whatever the window misses of mass_f·mass_g goes to the tail.
    let tail_mass = if f.tail_mass > 0.0 || g.tail_mass > 0.0 {
        (mass_f * mass_g - trapezoid(&values, dx)).max(0.0)
    } else {
        0.0
    };
    GridFn {
        grid: f.grid,
        values,
        tail_mass,
    }
}

/// `(f*g)(x) = ∫ g(x−z) f(z) dz` on the shared grid (Riemann sum, FFT).
///
/// The grid must contain `0`. When either input carries tail mass the mass the
/// window misses of `mass(f)·mass(g)` is booked as the result's tail mass.
pub fn convolve(f: &GridFn, g: &GridFn) -> Result<GridFn> {
    f.grid.check_same(&g.grid)?;
    let origin = aligned_origin(f)?;
    let full = linear_convolution(&f.values, &g.values);
    Ok(assemble(f, g, full, origin))
}

/// Direct `O(n²)` summation of [`convolve`]; used as a cross-check.
pub fn convolve_direct(f: &GridFn, g: &GridFn) -> Result<GridFn> {
    f.grid.check_same(&g.grid)?;
    let origin = aligned_origin(f)?;
    let full = direct_linear_convolution(&f.values, &g.values);
    Ok(assemble(f, g, full, origin))
}
