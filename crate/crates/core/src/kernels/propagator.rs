//! Windowed transition operators `u ↦ ∫ k(τ, x, y) u(y) dy` acting on
//! [`LineFn`]s, including the part of `u` that lives beyond the window.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use crate::error::{require_positive, Error, Result};
use crate::kernels::cauchy::{cauchy_cell_average, cauchy_profile, cauchy_upper_mass};
use crate::kernels::step::{step_kernel, StepKernel};
use crate::numerics::quad::{geometric, half_line};
use crate::numerics::{trapezoid, Grid1D, LineFn, OffsetConvolver, Side, TailShape};

/// Transition kernel started from one grid node: an atom at the node plus a
/// density sampled on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub atom: f64,
    pub density: Vec<f64>,
}

/// A transition operator restricted to a grid window.
///
/// All kernels in this crate are symmetric, so the same operator propagates
/// forward (`θ*`) and backward (`θ`).
pub trait Propagator: Send + Sync {
    fn grid(&self) -> Grid1D;

    /// `(K_τ u)(x_i)` on the window; the tails of the result are refit to
    /// the propagated tail shapes.
    fn propagate(&self, u: &LineFn, tau: f64) -> Result<LineFn>;

    /// The kernel started at grid node `j`.
    fn column(&self, tau: f64, j: usize) -> Result<Column>;

    /// `∫ shape(x)·(K_τ u)(x) dx` over the part of the line beyond the window
    /// on `side`. The window–tail coupling is the one used by
    /// [`Propagator::propagate`], so that pairing a tail with `K_τ u` is the
    /// same as pairing `u` with the propagated tail.
    fn tail_moment(&self, u: &LineFn, tau: f64, shape: &TailShape, side: Side) -> Result<f64>;

    /// Density part of the kernel from `y` to `x`.
    fn density(&self, tau: f64, y: f64, x: f64) -> Result<f64>;

    /// Weight of the atom at `x = y`.
    fn atom(&self, tau: f64, y: f64) -> Result<f64>;
}

enum ProfileKind {
    Cauchy,
    Step(StepKernel),
}

/// A translation-invariant kernel at one time, prepared for the window.
struct Profile {
    tau: f64,
    kind: ProfileKind,
    atom: f64,
    total_mass: f64,
    /// `∫_{k·dx}^∞ κ` for `k = 0…n-1`.
    upper: Vec<f64>,
    /// `κ(k·dx)` for `k = -(n-1)…(n-1)`.
    kernel: Vec<f64>,
    /// Window quadrature weights: end-corrected when the kernel is smooth on
    /// the grid scale, trapezoid otherwise.
    weights: Vec<f64>,
    conv: OffsetConvolver,
    /// Share of a flat unit tail on each side, per node.
    flat_left: Vec<f64>,
    flat_right: Vec<f64>,
}

impl Profile {
    fn value(&self, z: f64) -> f64 {
        match &self.kind {
            ProfileKind::Cauchy => cauchy_profile(self.tau, z),
            ProfileKind::Step(k) => k.density(z),
        }
    }

    /// `∫_d^∞ κ` for `d > 0`.
    fn upper_mass(&self, d: f64, h: f64) -> f64 {
        match &self.kind {
            ProfileKind::Cauchy => cauchy_upper_mass(self.tau, d),
            ProfileKind::Step(_) => {
                let n = self.upper.len();
                let span = (n - 1) as f64 * h;
                if d >= span {
                    return self.upper[n - 1] * span / d;
                }
                let s = d / h;
                let k = (s.floor() as usize).min(n - 2);
                let a = s - k as f64;
                (1.0 - a) * self.upper[k] + a * self.upper[k + 1]
            }
        }
    }

    fn build(grid: Grid1D, tau: f64, kind: ProfileKind) -> Result<Profile> {
        let n = grid.n();
        let h = grid.dx();
        let offsets = grid.offset_grid();
        let (atom, total_mass, kernel, upper): (f64, f64, Vec<f64>, Vec<f64>) = match &kind {
            ProfileKind::Cauchy => {
                let kernel = if tau >= 4.0 * h {
                    offsets.points().map(|z| cauchy_profile(tau, z)).collect()
                } else {
                    offsets.points().map(|z| cauchy_cell_average(tau, z, h)).collect()
                };
                let upper = (0..n).map(|k| cauchy_upper_mass(tau, k as f64 * h)).collect();
                (0.0, 1.0, kernel, upper)
            }
            ProfileKind::Step(k) => {
                let v = &k.ac_part.values;
                let half = n - 1;
                // upper[k] = ∫_{k·dx}^∞ κ, from the grid plus half the booked tail
                let mut upper = vec![0.0; n];
                let mut acc = 0.5 * k.ac_part.tail_mass;
                upper[n - 1] = acc;
                for kk in (0..n - 1).rev() {
                    acc += 0.5 * h * (v[half + kk] + v[half + kk + 1]);
                    upper[kk] = acc;
                }
                (k.atom_weight, k.total_mass(), v.clone(), upper)
            }
        };
        let weights = match &kind {
            ProfileKind::Cauchy if tau >= 4.0 * h => grid.gregory_weights(),
            _ => grid.trapezoid_weights(),
        };
        let conv = OffsetConvolver::new(&kernel, n)?;
        let row = conv.apply(&weights);
        let mut flat_left = vec![0.0; n];
        let mut flat_right = vec![0.0; n];
        for i in 0..n {
            let deficit = (total_mass - atom - row[i]).max(0.0);
            let ul = upper[i];
            let ur = upper[n - 1 - i];
            let share = if ul + ur > 0.0 { ur / (ul + ur) } else { 0.5 };
            flat_right[i] = deficit * share;
            flat_left[i] = deficit * (1.0 - share);
        }
        Ok(Profile {
            tau,
            kind,
            atom,
            total_mass,
            upper,
            kernel,
            weights,
            conv,
            flat_left,
            flat_right,
        })
    }
}

type TailKey = (u64, String, bool);
type PairKey = (u64, String, bool, String, bool);

/// Shared machinery of the translation-invariant propagators.
struct Windowed {
    grid: Grid1D,
    profiles: Mutex<HashMap<u64, Arc<Profile>>>,
    tails: Mutex<HashMap<TailKey, Arc<Vec<f64>>>>,
    pairs: Mutex<HashMap<PairKey, f64>>,
}

const CACHE_LIMIT: usize = 256;

impl Windowed {
    fn new(grid: Grid1D) -> Self {
        Self {
            grid,
            profiles: Mutex::new(HashMap::new()),
            tails: Mutex::new(HashMap::new()),
            pairs: Mutex::new(HashMap::new()),
        }
    }

    fn profile(&self, tau: f64, make: impl FnOnce() -> Result<ProfileKind>) -> Result<Arc<Profile>> {
        let key = tau.to_bits();
        if let Some(p) = self.profiles.lock().unwrap().get(&key) {
            return Ok(p.clone());
        }
        // built outside the lock: profile construction may itself use rayon
        let p = Arc::new(Profile::build(self.grid, tau, make()?)?);
        let mut cache = self.profiles.lock().unwrap();
        if cache.len() >= CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(key, p.clone());
        Ok(p)
    }

    /// `D_i = ∫_beyond κ(y − x_i) shape(y) dy` for a non-flat tail.
    fn tail_vector(&self, p: &Profile, shape: &TailShape, side: Side) -> Arc<Vec<f64>> {
        let key = (p.tau.to_bits(), shape.key(), side == Side::Right);
        if let Some(d) = self.tails.lock().unwrap().get(&key) {
            return d.clone();
        }
        let g = self.grid;
        let h0 = 0.25 * p.tau.min(g.dx()).max(1e-6);
        let d: Vec<f64> = g
            .points()
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&x| match side {
                Side::Right => half_line(&|y| p.value(y - x) * shape.profile(y), g.x_max(), h0),
                Side::Left => half_line(&|y| p.value(x + y) * shape.profile(-y), -g.x_min(), h0),
            })
            .collect();
        let d = Arc::new(d);
        let mut cache = self.tails.lock().unwrap();
        if cache.len() >= CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(key, d.clone());
        d
    }

    /// Window–tail coupling `D_i`: the flat deficit share for flat tails.
    fn coupling(&self, p: &Profile, shape: &TailShape, side: Side) -> Arc<Vec<f64>> {
        match (shape, side) {
            (TailShape::Flat, Side::Left) => Arc::new(p.flat_left.clone()),
            (TailShape::Flat, Side::Right) => Arc::new(p.flat_right.clone()),
            _ => self.tail_vector(p, shape, side),
        }
    }

    fn edge(&self, side: Side) -> (f64, f64) {
        match side {
            Side::Left => (self.grid.x_min(), -1.0),
            Side::Right => (self.grid.x_max(), 1.0),
        }
    }

    /// `∫_{side1} ∫_{side2} s1(x) k_τ(x, y) s2(y) dy dx` over two tails.
    fn tail_pair(&self, p: &Profile, s1: &TailShape, side1: Side, s2: &TailShape, side2: Side) -> Result<f64> {
        // one evaluation order for both argument orders keeps the pairing symmetric
        let (k1, k2) = ((s1.key(), side1 == Side::Right), (s2.key(), side2 == Side::Right));
        let (s1, side1, s2, side2) = if k1 <= k2 {
            (s1, side1, s2, side2)
        } else {
            (s2, side2, s1, side1)
        };
        let key = (
            p.tau.to_bits(),
            s1.key(),
            side1 == Side::Right,
            s2.key(),
            side2 == Side::Right,
        );
        if let Some(v) = self.pairs.lock().unwrap().get(&key) {
            return Ok(*v);
        }
        let v = self.compute_pair(p, s1, side1, s2, side2)?;
        let mut cache = self.pairs.lock().unwrap();
        if cache.len() >= CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(key, v);
        Ok(v)
    }

    fn compute_pair(&self, p: &Profile, s1: &TailShape, side1: Side, s2: &TailShape, side2: Side) -> Result<f64> {
        let h = self.grid.dx();
        let width = self.grid.x_max() - self.grid.x_min();
        let h0 = 0.25 * p.tau.min(h).max(1e-6);
        let flat = |s: &TailShape| matches!(s, TailShape::Flat);
        let (e1, d1) = self.edge(side1);
        let (e2, d2) = self.edge(side2);
        match (flat(s1), flat(s2)) {
            (true, true) => Err(Error::param("tail", "two flat tails have no finite pairing")),
            (false, true) | (true, false) => {
                let (s, side, other) = if flat(s2) {
                    (s1, side1, side2)
                } else {
                    (s2, side2, side1)
                };
                let (e, d) = self.edge(side);
                // kernel mass reaching the far tail from x = e + d·r
                let far = half_line(&|r| s.profile(e + d * r) * p.upper_mass(width + r, h), 0.0, h0);
                if side != other {
                    return Ok(far);
                }
                let mass = s
                    .mass_beyond(e, side)
                    .ok_or_else(|| Error::param("tail", "a flat tail pairs only with an integrable one"))?;
                // K1 = total mass: what the window and the far tail do not take stays here
                let dvec = self.tail_vector(p, s, side);
                let window: f64 = p.weights.iter().zip(dvec.iter()).map(|(w, v)| w * v).sum();
                Ok(p.total_mass * mass - window - far)
            }
            (false, false) if side1 == side2 => {
                let (e, d) = (e1, d1);
                let inner = |x: f64, r: f64| {
                    let inward = geometric(&|z| p.value(z) * s2.profile(x - d * z), 0.0, r, h0);
                    let outward = half_line(&|z| p.value(z) * s2.profile(x + d * z), 0.0, h0);
                    p.atom * s2.profile(x) + inward + outward
                };
                Ok(half_line(
                    &|r| {
                        let x = e + d * r;
                        s1.profile(x) * inner(x, r)
                    },
                    0.0,
                    h0,
                ))
            }
            (false, false) => Ok(half_line(
                &|r1| {
                    let x = e1 + d1 * r1;
                    s1.profile(x) * half_line(&|r2| p.value(width + r1 + r2) * s2.profile(e2 + d2 * r2), 0.0, h0)
                },
                0.0,
                h0,
            )),
        }
    }

    fn tail_moment(&self, p: &Profile, u: &LineFn, shape: &TailShape, side: Side) -> Result<f64> {
        self.grid.check_same(&u.grid)?;
        let d = self.coupling(p, shape, side);
        let mut acc: f64 = u
            .values
            .iter()
            .zip(&p.weights)
            .zip(d.iter())
            .map(|((v, w), di)| v * w * di)
            .sum();
        for s in [Side::Left, Side::Right] {
            let tail = u.tail(s);
            if tail.scale != 0.0 {
                acc += tail.scale * self.tail_pair(p, shape, side, &tail.shape, s)?;
            }
        }
        Ok(acc)
    }

    fn apply(&self, p: &Profile, u: &LineFn) -> Result<LineFn> {
        self.grid.check_same(&u.grid)?;
        let wu: Vec<f64> = u.values.iter().zip(&p.weights).map(|(a, b)| a * b).collect();
        let mut out = p.conv.apply(&wu);
        for (o, v) in out.iter_mut().zip(&u.values) {
            *o += p.atom * v;
        }
        for side in [Side::Left, Side::Right] {
            let tail = u.tail(side);
            if tail.scale == 0.0 {
                continue;
            }
            let d = self.coupling(p, &tail.shape, side);
            for (o, di) in out.iter_mut().zip(d.iter()) {
                *o += tail.scale * di;
            }
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("propagate"));
        }
        LineFn::with_shapes(
            self.grid,
            out,
            u.left.shape.propagated(p.tau),
            u.right.shape.propagated(p.tau),
        )
    }

    fn column(&self, p: &Profile, j: usize) -> Result<Column> {
        let n = self.grid.n();
        if j >= n {
            return Err(Error::param("j", format!("node {j} outside a grid of {n} points")));
        }
        let density = (0..n).map(|i| p.kernel[i + n - 1 - j]).collect();
        Ok(Column { atom: p.atom, density })
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !tau.is_finite() || tau < 0.0 {
        return Err(Error::param(
            "tau",
            format!("must be finite and nonnegative, got {tau}"),
        ));
    }
    Ok(())
}

fn identity_column(grid: Grid1D, j: usize) -> Result<Column> {
    if j >= grid.n() {
        return Err(Error::param(
            "j",
            format!("node {j} outside a grid of {} points", grid.n()),
        ));
    }
    Ok(Column {
        atom: 1.0,
        density: vec![0.0; grid.n()],
    })
}

/// `∫_side shape·u` at `τ = 0`.
fn identity_moment(u: &LineFn, shape: &TailShape, side: Side) -> Result<f64> {
    let tail = u.tail(side);
    if tail.scale == 0.0 {
        return Ok(0.0);
    }
    if matches!((shape, &tail.shape), (TailShape::Flat, TailShape::Flat)) {
        return Err(Error::param("tail", "two flat tails have no finite pairing"));
    }
    let (e, d) = match side {
        Side::Left => (u.grid.x_min(), -1.0),
        Side::Right => (u.grid.x_max(), 1.0),
    };
    Ok(half_line(
        &|r| shape.profile(e + d * r) * tail.value(e + d * r),
        0.0,
        u.grid.dx(),
    ))
}

/// The exact Cauchy semigroup on a window.
pub struct CauchyPropagator {
    inner: Windowed,
}

impl CauchyPropagator {
    pub fn new(grid: Grid1D) -> Self {
        Self {
            inner: Windowed::new(grid),
        }
    }

    fn profile(&self, tau: f64) -> Result<Arc<Profile>> {
        self.inner.profile(tau, || Ok(ProfileKind::Cauchy))
    }
}

impl Propagator for CauchyPropagator {
    fn grid(&self) -> Grid1D {
        self.inner.grid
    }

    fn propagate(&self, u: &LineFn, tau: f64) -> Result<LineFn> {
        check_tau(tau)?;
        if tau == 0.0 {
            return Ok(u.clone());
        }
        self.inner.apply(&*self.profile(tau)?, u)
    }

    fn column(&self, tau: f64, j: usize) -> Result<Column> {
        check_tau(tau)?;
        if tau == 0.0 {
            return identity_column(self.inner.grid, j);
        }
        self.inner.column(&*self.profile(tau)?, j)
    }

    fn tail_moment(&self, u: &LineFn, tau: f64, shape: &TailShape, side: Side) -> Result<f64> {
        check_tau(tau)?;
        if tau == 0.0 {
            return identity_moment(u, shape, side);
        }
        self.inner.tail_moment(&*self.profile(tau)?, u, shape, side)
    }

    fn density(&self, tau: f64, y: f64, x: f64) -> Result<f64> {
        require_positive("tau", tau)?;
        Ok(cauchy_profile(tau, x - y))
    }

    fn atom(&self, tau: f64, _y: f64) -> Result<f64> {
        check_tau(tau)?;
        Ok(if tau == 0.0 { 1.0 } else { 0.0 })
    }
}

/// The compound-Poisson step semigroup of cutoff `ε` on a window.
pub struct StepPropagator {
    epsilon: f64,
    tol_series: f64,
    inner: Windowed,
}

impl StepPropagator {
    pub fn new(grid: Grid1D, epsilon: f64, tol_series: f64) -> Result<Self> {
        require_positive("epsilon", epsilon)?;
        require_positive("tol_series", tol_series)?;
        Ok(Self {
            epsilon,
            tol_series,
            inner: Windowed::new(grid),
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Jump rate `2/(πε)`.
    pub fn rate(&self) -> f64 {
        2.0 / (PI * self.epsilon)
    }

    fn profile(&self, tau: f64) -> Result<Arc<Profile>> {
        self.inner.profile(tau, || {
            let k = step_kernel(self.epsilon, tau, self.inner.grid.offset_grid(), self.tol_series)?;
            Ok(ProfileKind::Step(k))
        })
    }

    /// The step kernel on the offset grid of the window at time `tau`.
    pub fn kernel(&self, tau: f64) -> Result<StepKernel> {
        match &self.profile(tau)?.kind {
            ProfileKind::Step(k) => Ok(k.clone()),
            ProfileKind::Cauchy => unreachable!("step propagator holds step profiles"),
        }
    }
}

impl Propagator for StepPropagator {
    fn grid(&self) -> Grid1D {
        self.inner.grid
    }

    fn propagate(&self, u: &LineFn, tau: f64) -> Result<LineFn> {
        check_tau(tau)?;
        if tau == 0.0 {
            return Ok(u.clone());
        }
        self.inner.apply(&*self.profile(tau)?, u)
    }

    fn column(&self, tau: f64, j: usize) -> Result<Column> {
        check_tau(tau)?;
        if tau == 0.0 {
            return identity_column(self.inner.grid, j);
        }
        self.inner.column(&*self.profile(tau)?, j)
    }

    fn tail_moment(&self, u: &LineFn, tau: f64, shape: &TailShape, side: Side) -> Result<f64> {
        check_tau(tau)?;
        if tau == 0.0 {
            return identity_moment(u, shape, side);
        }
        self.inner.tail_moment(&*self.profile(tau)?, u, shape, side)
    }

    fn density(&self, tau: f64, y: f64, x: f64) -> Result<f64> {
        check_tau(tau)?;
        if tau == 0.0 {
            return Ok(0.0);
        }
        Ok(self.profile(tau)?.value(x - y))
    }

    fn atom(&self, tau: f64, _y: f64) -> Result<f64> {
        check_tau(tau)?;
        Ok((-self.rate() * tau).exp())
    }
}

/// Trapezoid mass of a column plus its atom.
pub fn column_mass(grid: Grid1D, c: &Column) -> f64 {
    c.atom + trapezoid(&c.density, grid.dx())
}
