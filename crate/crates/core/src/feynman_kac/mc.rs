use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use super::potential::Potential;
use crate::error::{require_nonnegative, require_positive, Error, Result};
use crate::numerics::{cauchy_cdf, map_chunks, Grid1D, GridFn, RandomStream};
use crate::schroedinger::{BaseKernel, KernelSpec, TOL_SERIES};
use crate::stepsim::{maximal_bound, StepPath};

/// `exp(−∫V(Y_s)ds)` along a step path; exact, since the path is piecewise
/// constant.
pub fn path_fk_weight(path: &StepPath, potential: &Potential) -> Result<f64> {
    path.validate()?;
    let integral: f64 = path.segments().map(|(a, b, x)| potential.eval(x) * (b - a)).sum();
    Ok((-integral).exp())
}

/// Terminal state and FK weight of one free path from `x0` over `[0, t]`.
fn weighted_walk<R: Rng + ?Sized>(epsilon: f64, x0: f64, t: f64, potential: &Potential, rng: &mut R) -> (f64, f64) {
    let mut integral = 0.0;
    let mut last = 0.0;
    let mut cur = x0;
    crate::stepsim::walk_free(epsilon, x0, (0.0, t), rng, |s, x| {
        integral += potential.eval(cur) * (s - last);
        last = s;
        cur = x;
    });
    integral += potential.eval(cur) * (t - last);
    (cur, (-integral).exp())
}

/// Binned Monte-Carlo estimate of the FK kernel `k^V_t(x, ·)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FKKernelEstimate {
    pub epsilon: f64,
    pub t: f64,
    pub x_source: f64,
    pub bin_edges: Vec<f64>,
    pub weights_mean: Vec<f64>,
    pub weights_stderr: Vec<f64>,
    pub n_paths: usize,
    /// `E[exp(−∫V)]` over all paths, wherever they end.
    pub total_mean: f64,
    pub total_stderr: f64,
}

impl FKKernelEstimate {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin_lo,bin_hi,mean,stderr\n");
        for (k, (m, e)) in self.weights_mean.iter().zip(&self.weights_stderr).enumerate() {
            let _ = writeln!(s, "{},{},{},{:e}", self.bin_edges[k], self.bin_edges[k + 1], m, e);
        }
        s
    }
}

fn check_edges(edges: &[f64]) -> Result<()> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) || edges.iter().any(|e| !e.is_finite()) {
        return Err(Error::param(
            "bin_edges",
            "need at least two finite, strictly increasing edges",
        ));
    }
    Ok(())
}

fn check_paths(n_paths: usize) -> Result<()> {
    if n_paths == 0 {
        return Err(Error::param("n_paths", "need at least one path"));
    }
    Ok(())
}

fn mean_stderr(sum: f64, sum_sq: f64, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = sum / nf;
    let var = if n > 1 {
        ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0)
    } else {
        0.0
    };
    (mean, (var / nf).sqrt())
}

/// `E_x[χ_Γ(Y^ε_t) exp(−∫_0^t V(Y^ε_s)ds)]` for each bin `Γ`, one stream per path.
pub fn fk_kernel_mc(
    epsilon: f64,
    x: f64,
    t: f64,
    potential: &Potential,
    bin_edges: &[f64],
    n_paths: usize,
    stream: RandomStream,
) -> Result<FKKernelEstimate> {
    require_positive("epsilon", epsilon)?;
    require_nonnegative("t", t)?;
    potential.validate()?;
    check_edges(bin_edges)?;
    check_paths(n_paths)?;
    let bins = bin_edges.len() - 1;
    let parts = map_chunks(n_paths, |range| {
        let mut s = vec![0.0; bins + 1];
        let mut s2 = vec![0.0; bins + 1];
        for i in range {
            let (end, w) = if t == 0.0 {
                (x, 1.0)
            } else {
                weighted_walk(epsilon, x, t, potential, &mut stream.path(i as u64).rng())
            };
            s[bins] += w;
            s2[bins] += w * w;
            let k = bin_edges.partition_point(|&e| e <= end);
            if k >= 1 && k <= bins && end < bin_edges[bins] {
                s[k - 1] += w;
                s2[k - 1] += w * w;
            }
        }
        (s, s2)
    });
    let mut s = vec![0.0; bins + 1];
    let mut s2 = vec![0.0; bins + 1];
    for (a, b) in parts {
        for k in 0..=bins {
            s[k] += a[k];
            s2[k] += b[k];
        }
    }
    let stats: Vec<(f64, f64)> = (0..=bins).map(|k| mean_stderr(s[k], s2[k], n_paths)).collect();
    Ok(FKKernelEstimate {
        epsilon,
        t,
        x_source: x,
        bin_edges: bin_edges.to_vec(),
        weights_mean: stats[..bins].iter().map(|p| p.0).collect(),
        weights_stderr: stats[..bins].iter().map(|p| p.1).collect(),
        n_paths,
        total_mean: stats[bins].0,
        total_stderr: stats[bins].1,
    })
}

/// Sampler for the piecewise-linear interpolant of a nonnegative grid function.
struct LinearSampler {
    grid: Grid1D,
    values: Vec<f64>,
    cumulative: Vec<f64>,
}

impl LinearSampler {
    fn new(f: &GridFn) -> Result<Self> {
        if f.values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::param("f", "test functions must be finite and nonnegative"));
        }
        let dx = f.grid.dx();
        let mut cumulative = Vec::with_capacity(f.values.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in f.values.windows(2) {
            acc += 0.5 * dx * (w[0] + w[1]);
            cumulative.push(acc);
        }
        if !(acc > 0.0) {
            return Err(Error::param("f", "test function has zero integral"));
        }
        Ok(LinearSampler {
            grid: f.grid,
            values: f.values.clone(),
            cumulative,
        })
    }

    fn mass(&self) -> f64 {
        self.cumulative[self.cumulative.len() - 1]
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let target = rng.random::<f64>() * self.mass();
        let i = (self.cumulative.partition_point(|&c| c <= target).max(1) - 1).min(self.values.len() - 2);
        let (a, b) = (self.values[i], self.values[i + 1]);
        let u = ((target - self.cumulative[i]) / (self.cumulative[i + 1] - self.cumulative[i])).clamp(0.0, 1.0);
        // invert a·s + (b − a)s²/2 = u(a + b)/2 on [0, 1]
        let s = if (b - a).abs() <= 1e-12 * (a + b) {
            u
        } else {
            let disc = a * a + u * (b - a) * (a + b);
            (disc.max(0.0).sqrt() - a) / (b - a)
        };
        self.grid.point(i) + s.clamp(0.0, 1.0) * self.grid.dx()
    }
}

fn interpolate_or_zero(f: &GridFn, x: f64) -> f64 {
    f.interpolate(x).unwrap_or(0.0)
}

/// Both sides of `∫f(x)E_x[g(Y_t)e^{−∫V}]dx = ∫g(x)E_x[f(Y_t)e^{−∫V}]dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetryCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// `sqrt(σ_lhs² + σ_rhs²)`.
    pub stderr: f64,
}

impl SymmetryCheck {
    pub fn passes(&self, sigmas: f64) -> bool {
        (self.lhs - self.rhs).abs() <= sigmas * self.stderr
    }
}

fn one_side(
    epsilon: f64,
    t: f64,
    potential: &Potential,
    start: &GridFn,
    end: &GridFn,
    n_paths: usize,
    stream: RandomStream,
) -> Result<(f64, f64)> {
    let sampler = LinearSampler::new(start)?;
    let mass = sampler.mass();
    let parts = map_chunks(n_paths, |range| {
        let (mut s, mut s2) = (0.0, 0.0);
        for i in range {
            let mut rng = stream.path(i as u64).rng();
            let x = sampler.sample(&mut rng);
            let (y, w) = weighted_walk(epsilon, x, t, potential, &mut rng);
            let v = mass * interpolate_or_zero(end, y) * w;
            s += v;
            s2 += v * v;
        }
        (s, s2)
    });
    let (s, s2) = parts.into_iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(mean_stderr(s, s2, n_paths))
}

/// Monte-Carlo check of the symmetry of the FK semigroup: starting points are
/// drawn from `f/∫f` (resp. `g/∫g`), the two sides on independent streams.
pub fn fk_symmetry_check(
    epsilon: f64,
    t: f64,
    potential: &Potential,
    f: &GridFn,
    g: &GridFn,
    n_paths: usize,
    stream: RandomStream,
) -> Result<SymmetryCheck> {
    require_positive("epsilon", epsilon)?;
    require_positive("t", t)?;
    potential.validate()?;
    check_paths(n_paths)?;
    f.grid.check_same(&g.grid)?;
    let (lhs, el) = one_side(epsilon, t, potential, f, g, n_paths, stream.fork(1))?;
    let (rhs, er) = one_side(epsilon, t, potential, g, f, n_paths, stream.fork(2))?;
    Ok(SymmetryCheck {
        lhs,
        rhs,
        stderr: (el * el + er * er).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundRow {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub estimate: f64,
    pub stderr: f64,
    /// `½e^{−c_n t}` times the Cauchy mass of the bin.
    pub floor: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    /// Half-width of the window `[−n, n]`.
    pub n: f64,
    pub c_n: f64,
    /// `3(1 − (2/π)arctan((n − |x|)/(3t)))`, required to be at most ½.
    pub exit_bound: f64,
    pub rows: Vec<LowerBoundRow>,
}

impl LowerBoundReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin_lo,bin_hi,estimate,stderr,floor,pass\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{:e},{},{}",
                r.bin_lo, r.bin_hi, r.estimate, r.stderr, r.floor, r.pass
            );
        }
        s
    }
}

/// Smallest power-of-two multiple of `max(1, |x|)` whose exit bound is at most ½.
fn auto_window(x: f64, t: f64) -> f64 {
    let mut n = 2.0 * x.abs().max(1.0);
    while maximal_bound(n - x.abs(), t) > 0.5 {
        n *= 2.0;
    }
    n
}

/// Checks `k^V_t(x, Γ) ≥ ½e^{−c_n t}k_t(x, Γ) − 3σ` bin by bin, with
/// `c_n = sup_{|z|≤n} V`. Without `n` the smallest adequate dyadic window is
/// used; a given `n` whose exit bound exceeds ½ is rejected.
#[allow(clippy::too_many_arguments)]
pub fn fk_lower_bound_check(
    epsilon: f64,
    x: f64,
    bin_edges: &[f64],
    t: f64,
    potential: &Potential,
    n: Option<f64>,
    n_paths: usize,
    stream: RandomStream,
) -> Result<LowerBoundReport> {
    require_positive("t", t)?;
    let n = match n {
        Some(n) => {
            require_positive("n", n)?;
            let bound = if n > x.abs() {
                maximal_bound(n - x.abs(), t)
            } else {
                f64::INFINITY
            };
            if bound > 0.5 {
                return Err(Error::WindowTooSmall {
                    n,
                    bound,
                    required: 0.5,
                });
            }
            n
        }
        None => auto_window(x, t),
    };
    let c_n = potential.compact_bound(n);
    let est = fk_kernel_mc(epsilon, x, t, potential, bin_edges, n_paths, stream)?;
    let factor = 0.5 * (-c_n * t).exp();
    let rows = bin_edges
        .windows(2)
        .zip(est.weights_mean.iter().zip(&est.weights_stderr))
        .map(|(w, (&m, &e))| {
            let floor = factor * (cauchy_cdf(w[1], x, t) - cauchy_cdf(w[0], x, t));
            LowerBoundRow {
                bin_lo: w[0],
                bin_hi: w[1],
                estimate: m,
                stderr: e,
                floor,
                pass: m >= floor - 3.0 * e,
            }
        })
        .collect();
    Ok(LowerBoundReport {
        n,
        c_n,
        exit_bound: maximal_bound(n - x.abs(), t),
        rows,
    })
}

/// `∫_a^b` of the piecewise-linear interpolant of `values` on `grid`.
pub(crate) fn linear_bin_integral(grid: Grid1D, values: &[f64], a: f64, b: f64) -> f64 {
    let (lo, hi) = (a.max(grid.x_min()), b.min(grid.x_max()));
    if hi <= lo {
        return 0.0;
    }
    let at = |x: f64| {
        let (i, s) = grid.locate(x);
        (1.0 - s) * values[i] + s * values[i + 1]
    };
    let mut total = 0.0;
    let mut x = lo;
    while x < hi {
        let (i, _) = grid.locate(x);
        let next = grid.point(i + 1).min(hi);
        let next = if next <= x { hi.min(x + grid.dx()) } else { next };
        total += 0.5 * (next - x) * (at(x) + at(next));
        x = next;
    }
    total
}

/// Bin masses of the Strang-split grid FK kernel `k^V_t(x, ·)` on the step
/// kernel of cutoff `ε`; `x` must be a grid node.
pub fn fk_kernel_grid(
    epsilon: f64,
    x: f64,
    t: f64,
    potential: &Potential,
    bin_edges: &[f64],
    grid: Grid1D,
    dt: f64,
) -> Result<Vec<f64>> {
    check_edges(bin_edges)?;
    require_positive("t", t)?;
    let j = grid.nearest(x);
    if (grid.point(j) - x).abs() > 1e-9 * grid.dx() {
        return Err(Error::param("x", format!("{x} is not a grid node")));
    }
    let prop = KernelSpec::Perturbed {
        potential: potential.clone(),
        base: BaseKernel::TruncatedStep { epsilon },
        dt,
    }
    .propagator(grid, TOL_SERIES)?;
    let col = prop.column(t, j)?;
    Ok(bin_edges
        .windows(2)
        .map(|w| {
            let mut m = linear_bin_integral(grid, &col.density, w[0], w[1]);
            if w[0] <= x && x < w[1] {
                m += col.atom;
            }
            m
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_of_simple_paths() {
        let p = StepPath {
            t_start: 0.0,
            t_end: 2.0,
            x0: 0.0,
            jump_times: vec![0.5, 1.5],
            states: vec![3.0, 0.5],
        };
        let v = Potential::Box {
            a: -1.0,
            b: 1.0,
            height: 2.0,
        };
        // time inside the box: 0.5 + 0.5
        assert!((path_fk_weight(&p, &v).unwrap() - (-2.0f64).exp()).abs() < 1e-15);
        assert_eq!(path_fk_weight(&p, &Potential::zero()).unwrap(), 1.0);
        let c = Potential::Constant { c: 0.7 };
        assert!((path_fk_weight(&p, &c).unwrap() - (-1.4f64).exp()).abs() < 1e-15);
        // multiplicativity over a split
        let a = path_fk_weight(&p.restrict(0.0, 1.2).unwrap(), &v).unwrap();
        let b = path_fk_weight(&p.restrict(1.2, 2.0).unwrap(), &v).unwrap();
        assert!((a * b - path_fk_weight(&p, &v).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn linear_sampler_matches_its_density() {
        let g = Grid1D::new(0.0, 1.0, 3).unwrap();
        let f = GridFn::new(g, vec![0.0, 1.0, 0.0], 0.0).unwrap();
        let s = LinearSampler::new(&f).unwrap();
        let mut rng = RandomStream::new(1, 1).rng();
        let n = 200_000;
        let below: usize = (0..n).filter(|_| s.sample(&mut rng) < 0.25).count();
        // triangle density: P(X < 1/4) = 1/8
        assert!((below as f64 / n as f64 - 0.125).abs() < 3e-3);
    }

    #[test]
    fn bin_integral_is_exact_for_linear_data() {
        let g = Grid1D::new(-1.0, 1.0, 21).unwrap();
        let v: Vec<f64> = g.points().map(|x| 2.0 + x).collect();
        let m = linear_bin_integral(g, &v, -0.33, 0.71);
        let exact = |x: f64| 2.0 * x + 0.5 * x * x;
        assert!((m - (exact(0.71) - exact(-0.33))).abs() < 1e-13);
        assert_eq!(linear_bin_integral(g, &v, 2.0, 3.0), 0.0);
    }

    #[test]
    fn window_selection() {
        let v = Potential::Box {
            a: -1.0,
            b: 1.0,
            height: 1.0,
        };
        let edges = [-1.0, 0.0, 1.0];
        let e = fk_lower_bound_check(0.1, 0.0, &edges, 1.0, &v, Some(5.0), 10, RandomStream::new(1, 0)).unwrap_err();
        assert!(matches!(e, Error::WindowTooSmall { .. }));
        let r = fk_lower_bound_check(0.1, 0.0, &edges, 1.0, &v, None, 2000, RandomStream::new(1, 0)).unwrap();
        assert!(r.exit_bound <= 0.5 && r.c_n == 1.0);
        assert!(r.all_pass());
    }
}
