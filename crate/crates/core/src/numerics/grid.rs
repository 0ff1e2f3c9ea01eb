use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform lattice `x_min + i·dx`, `i = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n: usize,
    dx: f64,
}

/// Wire form of a grid: the spacing is derived, never stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

impl TryFrom<GridSpec> for Grid1D {
    type Error = Error;

    fn try_from(spec: GridSpec) -> Result<Self> {
        Grid1D::new(spec.x_min, spec.x_max, spec.n)
    }
}

impl From<Grid1D> for GridSpec {
    fn from(g: Grid1D) -> Self {
        GridSpec {
            x_min: g.x_min,
            x_max: g.x_max,
            n: g.n,
        }
    }
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) {
            return Err(Error::InvalidGrid("bounds must be finite".into()));
        }
        if x_min >= x_max {
            return Err(Error::InvalidGrid(format!(
                "x_min ({x_min}) must be below x_max ({x_max})"
            )));
        }
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 points, got {n}")));
        }
        let dx = (x_max - x_min) / (n - 1) as f64;
        Ok(Self { x_min, x_max, n, dx })
    }

    /// Symmetric grid `[-half_width, half_width]` whose spacing is as close to
    /// `dx` as possible while keeping `0` a grid point.
    pub fn symmetric(half_width: f64, dx: f64) -> Result<Self> {
        if !(half_width > 0.0 && dx > 0.0) {
            return Err(Error::InvalidGrid("half width and dx must be positive".into()));
        }
        let half = (half_width / dx).round().max(1.0) as usize;
        Grid1D::new(-half_width, half_width, 2 * half + 1)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    #[inline]
    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.x_max
        } else {
            self.x_min + i as f64 * self.dx
        }
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.point(i))
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_min && x <= self.x_max
    }

    /// Index of the grid point nearest to `x`, clamped to the window.
    pub fn nearest(&self, x: f64) -> usize {
        let r = ((x - self.x_min) / self.dx).round();
        r.clamp(0.0, (self.n - 1) as f64) as usize
    }

    /// Cell index `i` and fraction `a` with `x = (1-a)·x_i + a·x_{i+1}`.
    /// Only meaningful for `x` inside the window.
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let r = ((x - self.x_min) / self.dx).clamp(0.0, (self.n - 1) as f64);
        let i = (r.floor() as usize).min(self.n - 2);
        (i, r - i as f64)
    }

    /// Offset of the origin in grid steps, if `0` is (to rounding) a grid point.
    pub fn origin_index(&self) -> Option<usize> {
        let r = -self.x_min / self.dx;
        let k = r.round();
        if k >= 0.0 && k <= (self.n - 1) as f64 && (r - k).abs() < 1e-8 {
            Some(k as usize)
        } else {
            None
        }
    }

    /// Grid of all pairwise differences `x_i - x_j`, i.e. `[-(n-1)dx, (n-1)dx]`.
    pub fn offset_grid(&self) -> Grid1D {
        let half = (self.n - 1) as f64 * self.dx;
        Grid1D {
            x_min: -half,
            x_max: half,
            n: 2 * self.n - 1,
            dx: self.dx,
        }
    }

    pub fn same_as(&self, other: &Grid1D) -> bool {
        self.n == other.n
            && (self.x_min - other.x_min).abs() <= 1e-12 * (1.0 + self.x_min.abs())
            && (self.x_max - other.x_max).abs() <= 1e-12 * (1.0 + self.x_max.abs())
    }

    pub fn check_same(&self, other: &Grid1D) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "[{}, {}; {}] vs [{}, {}; {}]",
                self.x_min, self.x_max, self.n, other.x_min, other.x_max, other.n
            )))
        }
    }

    /// Composite trapezoid weights.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let mut w = vec![self.dx; self.n];
        w[0] *= 0.5;
        w[self.n - 1] *= 0.5;
        w
    }

    /// Fourth-order end-corrected trapezoid weights
    /// `dx·[3/8, 7/6, 23/24, 1, …, 1, 23/24, 7/6, 3/8]`.
    ///
    /// Falls back to the trapezoid rule on grids with fewer than 7 points.
    pub fn gregory_weights(&self) -> Vec<f64> {
        if self.n < 7 {
            return self.trapezoid_weights();
        }
        let mut w = vec![self.dx; self.n];
        let ends = [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0];
        for (k, c) in ends.iter().enumerate() {
            w[k] = c * self.dx;
            w[self.n - 1 - k] = c * self.dx;
        }
        w
    }
}

/// Grid samples of a function plus the probability mass assigned analytically
/// outside the window (zero for functions that are not densities).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFn {
    pub grid: Grid1D,
    pub values: Vec<f64>,
    #[serde(default)]
    pub tail_mass: f64,
}

impl GridFn {
    pub fn new(grid: Grid1D, values: Vec<f64>, tail_mass: f64) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.n()
            )));
        }
        if !(tail_mass.is_finite() && tail_mass >= 0.0) {
            return Err(Error::param(
                "tail_mass",
                format!("must be non-negative, got {tail_mass}"),
            ));
        }
        Ok(Self {
            grid,
            values,
            tail_mass,
        })
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.n()],
            tail_mass: 0.0,
        }
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.points().map(f).collect();
        Self {
            grid,
            values,
            tail_mass: 0.0,
        }
    }

    pub fn with_tail_mass(mut self, tail_mass: f64) -> Self {
        self.tail_mass = tail_mass.max(0.0);
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Trapezoid integral over the window, without the tail.
    pub fn window_integral(&self) -> f64 {
        trapezoid(&self.values, self.grid.dx())
    }

    /// Linear interpolation; `None` outside the window.
    pub fn interpolate(&self, x: f64) -> Option<f64> {
        if !self.grid.contains(x) {
            return None;
        }
        let (i, a) = self.grid.locate(x);
        Some((1.0 - a) * self.values[i] + a * self.values[i + 1])
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFn {
        GridFn {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
            tail_mass: self.tail_mass,
        }
    }

    pub fn scaled(&self, c: f64) -> GridFn {
        GridFn {
            grid: self.grid,
            values: self.values.iter().map(|v| c * v).collect(),
            tail_mass: (c * self.tail_mass).abs(),
        }
    }

    /// `a·self + b·other` with tails combined the same way.
    pub fn lin_comb(&self, a: f64, other: &GridFn, b: f64) -> Result<GridFn> {
        self.grid.check_same(&other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(GridFn {
            grid: self.grid,
            values,
            tail_mass: (a * self.tail_mass + b * other.tail_mass).max(0.0),
        })
    }

    pub fn sup_distance(&self, other: &GridFn) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Trapezoid L¹ distance on the window.
    pub fn l1_distance(&self, other: &GridFn) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        let diff: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .collect();
        Ok(trapezoid(&diff, self.grid.dx()))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn trapezoid(values: &[f64], dx: f64) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => 0.0,
        n => {
            let inner: f64 = values[1..n - 1].iter().sum();
            dx * (inner + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

/// Trapezoid integral over the grid plus the analytically assigned tail mass.
pub fn integrate(f: &GridFn) -> f64 {
    f.window_integral() + f.tail_mass
}
