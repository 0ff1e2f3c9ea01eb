use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::path::{check_span, StepPath};
use crate::error::{require_positive, Error, Result};
use crate::kernels::q_eps;
use crate::numerics::quad::{geometric, gl_panel, half_line};
use crate::numerics::{LineFn, RandomStream, Side};
use crate::schroedinger::SchroedingerSolution;

/// `θ^ε(·,t)` tabulated at fixed times and interpolated linearly in between.
#[derive(Debug, Clone)]
pub struct ThetaTable {
    times: Vec<f64>,
    lines: Vec<LineFn>,
    /// `sup_x θ` over each pair of adjacent nodes.
    block_sup: Vec<f64>,
    /// Per block, `sup_{|x| ≥ i·dx} θ` for `i = 0, 1, …` up to the window.
    radial: Vec<Vec<f64>>,
}

/// Largest value of a line function: window values and a geometric sample of
/// the tails.
fn line_sup(f: &LineFn) -> f64 {
    let mut m = f.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for (side, edge) in [(Side::Left, f.grid.x_min()), (Side::Right, f.grid.x_max())] {
        let tail = f.tail(side);
        let d = if edge.abs() > 0.0 { edge.abs() } else { 1.0 };
        for j in 0..48 {
            let x = edge.signum() * d * 2f64.powi(j);
            m = m.max(tail.value(x));
        }
    }
    m
}

/// `sup_{|x| ≥ i·dx} f` for `i = 0, 1, …, ⌈max|edge|/dx⌉`.
fn radial_sup(f: &LineFn) -> Vec<f64> {
    let g = f.grid;
    let dx = g.dx();
    let reach = g.x_min().abs().max(g.x_max().abs());
    let len = (reach / dx).ceil() as usize + 1;
    let tail_beyond = |r: f64| {
        let left = f.left.value(-r.max(-g.x_min()));
        let right = f.right.value(r.max(g.x_max()));
        left.max(right)
    };
    let mut out: Vec<f64> = (0..len).map(|i| tail_beyond(i as f64 * dx)).collect();
    for (x, v) in g.points().zip(&f.values) {
        let i = ((x.abs() / dx).floor() as usize).min(len - 1);
        out[i] = out[i].max(*v);
    }
    for i in (0..len - 1).rev() {
        out[i] = out[i].max(out[i + 1]);
    }
    out
}

impl ThetaTable {
    pub fn from_lines(times: Vec<f64>, lines: Vec<LineFn>) -> Result<Self> {
        if times.len() < 2 || times.len() != lines.len() {
            return Err(Error::param("times", "need at least two nodes and one line per node"));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::param("times", "nodes must be strictly increasing"));
        }
        for l in &lines[1..] {
            lines[0].grid.check_same(&l.grid)?;
        }
        let sups: Vec<f64> = lines.iter().map(line_sup).collect();
        let block_sup = sups.windows(2).map(|w| w[0].max(w[1])).collect();
        let radial_one: Vec<Vec<f64>> = lines.iter().map(radial_sup).collect();
        let radial = radial_one
            .windows(2)
            .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| a.max(*b)).collect())
            .collect();
        Ok(ThetaTable {
            times,
            lines,
            block_sup,
            radial,
        })
    }

    /// An upper bound for `sup_{|x| ≥ r} θ` on block `k`. Tails are taken to
    /// decrease away from the window.
    fn outer_sup(&self, k: usize, r: f64) -> f64 {
        let table = &self.radial[k];
        // one node inward: interpolation reaches the node below r
        let i = ((r / self.grid().dx()).floor() - 1.0).max(0.0);
        if i < table.len() as f64 {
            return table[i as usize];
        }
        [&self.lines[k], &self.lines[k + 1]]
            .iter()
            .flat_map(|l| [l.left.value(-r), l.right.value(r)])
            .fold(0.0, f64::max)
    }

    /// `θ` of a solved system at `nodes` equally spaced times on `[0, T]`.
    pub fn from_solution(solution: &SchroedingerSolution, nodes: usize) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::param("nodes", format!("need at least 2, got {nodes}")));
        }
        let horizon = solution.horizon();
        let times: Vec<f64> = (0..nodes)
            .map(|k| {
                if k + 1 == nodes {
                    horizon
                } else {
                    horizon * k as f64 / (nodes - 1) as f64
                }
            })
            .collect();
        let lines = times
            .iter()
            .map(|&t| solution.theta_line(t))
            .collect::<Result<Vec<_>>>()?;
        Self::from_lines(times, lines)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn t_min(&self) -> f64 {
        self.times[0]
    }

    pub fn t_max(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn grid(&self) -> crate::numerics::Grid1D {
        self.lines[0].grid
    }

    fn block(&self, t: f64) -> usize {
        let k = self.times.partition_point(|&s| s <= t);
        k.saturating_sub(1).min(self.times.len() - 2)
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(self.t_min()..=self.t_max()).contains(&t) {
            return Err(Error::TimeOutOfRange {
                t,
                horizon: self.t_max(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, x: f64, t: f64) -> f64 {
        let k = self.block(t);
        let (a, b) = (self.times[k], self.times[k + 1]);
        let w = ((t - a) / (b - a)).clamp(0.0, 1.0);
        (1.0 - w) * self.lines[k].eval(x) + w * self.lines[k + 1].eval(x)
    }

    /// `sup θ` over space and over the whole table.
    pub fn sup(&self) -> f64 {
        self.block_sup.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `∫_{|x−y|>ε} q_ε(x−y)θ(x,t)dx`, exact for the piecewise-linear window
    /// values.
    fn q_moment(&self, epsilon: f64, t: f64, y: f64) -> f64 {
        let g = self.grid();
        let f = |x: f64| self.eval(x, t) / (PI * (x - y) * (x - y));
        let (cut_lo, cut_hi) = (y - epsilon, y + epsilon);
        let mut total = 0.0;
        let mut piece = |a: f64, b: f64| {
            for (lo, hi) in [(a, b.min(cut_lo)), (a.max(cut_hi), b)] {
                if hi > lo {
                    total += gl_panel(&f, lo, hi);
                }
            }
        };
        for i in 0..g.n() - 1 {
            piece(g.point(i), g.point(i + 1));
        }
        let h0 = g.dx();
        let (x_min, x_max) = (g.x_min(), g.x_max());
        // left tail (−∞, x_min] and right tail [x_max, ∞) minus the cutoff interval
        let start = x_min.min(cut_lo);
        total += half_line(&|r| f(start - r), 0.0, h0);
        if cut_hi < x_min {
            total += geometric(&|r| f(x_min - r), 0.0, x_min - cut_hi, h0);
        }
        let start = x_max.max(cut_hi);
        total += half_line(&|r| f(start + r), 0.0, h0);
        if cut_lo > x_max {
            total += geometric(&|r| f(x_max + r), 0.0, cut_lo - x_max, h0);
        }
        total
    }
}

/// The conditioned jump intensity `h_ε(t,y,x) = q_ε(x−y)θ^ε(x,t)/θ^ε(y,t)`.
#[derive(Debug, Clone)]
pub struct JumpIntensity {
    pub epsilon: f64,
    pub theta: ThetaTable,
}

impl JumpIntensity {
    pub fn new(epsilon: f64, theta: ThetaTable) -> Result<Self> {
        require_positive("epsilon", epsilon)?;
        Ok(JumpIntensity { epsilon, theta })
    }

    /// Built from a solution on a step kernel, with `nodes` time nodes.
    pub fn from_solution(solution: &SchroedingerSolution, nodes: usize) -> Result<Self> {
        let epsilon = solution
            .kernel
            .epsilon()
            .ok_or_else(|| Error::Unsupported("conditioned step paths need a step kernel".into()))?;
        Self::new(epsilon, ThetaTable::from_solution(solution, nodes)?)
    }

    /// Jump rate `2/(πε)` of the free process.
    pub fn free_rate(&self) -> f64 {
        2.0 / (PI * self.epsilon)
    }

    fn theta_at(&self, y: f64, t: f64) -> Result<f64> {
        self.theta.check_time(t)?;
        let v = self.theta.eval(y, t);
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::NonPositive {
                context: format!("θ^ε({y}, {t})"),
                value: v,
            });
        }
        Ok(v)
    }

    pub fn density(&self, t: f64, y: f64, x: f64) -> Result<f64> {
        let d = self.theta_at(y, t)?;
        Ok(q_eps(self.epsilon, x - y)? * self.theta.eval(x, t) / d)
    }

    /// Total rate `h_ε(t,y) = ∫h_ε(t,y,x)dx`.
    pub fn rate(&self, t: f64, y: f64) -> Result<f64> {
        let d = self.theta_at(y, t)?;
        Ok(self.theta.q_moment(self.epsilon, t, y) / d)
    }

    /// The bound `(sup θ/θ(y,t))·2/(πε)` on the total rate.
    pub fn rate_bound(&self, t: f64, y: f64) -> Result<f64> {
        Ok(self.theta.sup() / self.theta_at(y, t)? * self.free_rate())
    }

    /// `∫_a^b h_ε(t,y,x)dx`.
    pub fn interval_mass(&self, t: f64, y: f64, a: f64, b: f64) -> Result<f64> {
        let d = self.theta_at(y, t)?;
        let f = |x: f64| q_eps(self.epsilon, x - y).unwrap_or(0.0) * self.theta.eval(x, t);
        let mut total = 0.0;
        let (lo, hi) = (y - self.epsilon, y + self.epsilon);
        for (p, q) in [(a, b.min(lo)), (a.max(hi), b)] {
            if q > p {
                let n = ((q - p) / self.theta.grid().dx()).ceil().max(1.0) as usize;
                let h = (q - p) / n as f64;
                total += (0..n)
                    .map(|i| gl_panel(&f, p + i as f64 * h, p + (i + 1) as f64 * h))
                    .sum::<f64>();
            }
        }
        Ok(total / d)
    }
}

/// `h_ε(t,y,x)`; zero inside the cutoff.
pub fn jump_intensity_density(intensity: &JumpIntensity, t: f64, y: f64, x: f64) -> Result<f64> {
    intensity.density(t, y, x)
}

/// One path of the conditioned step process by thinning.
///
/// On each table block `[t_k, t_{k+1}]` candidate jumps arrive at the
/// dominating rate `R = (2/(πε))·M_k/min(θ_k(y), θ_{k+1}(y))`, with `M_k` a
/// bound for `θ` on the block; a candidate `x = y + J` (free jump law) is kept
/// with probability `θ(x,t)·min(θ_k(y), θ_{k+1}(y))/(M_k θ(y,t))`. Far from
/// the origin short and long jumps get separate bounds `M_k`.
pub fn sample_conditioned_path(
    intensity: &JumpIntensity,
    x0: f64,
    t_span: (f64, f64),
    stream: RandomStream,
) -> Result<StepPath> {
    let mut rng = stream.rng();
    let mut path = StepPath::constant(x0, t_span.0, t_span.1);
    walk_conditioned(intensity, x0, t_span, &mut rng, |t, x| {
        path.jump_times.push(t);
        path.states.push(x);
    })?;
    Ok(path)
}

pub(crate) fn walk_conditioned<R: Rng + ?Sized>(
    intensity: &JumpIntensity,
    x0: f64,
    t_span: (f64, f64),
    rng: &mut R,
    mut visit: impl FnMut(f64, f64),
) -> Result<f64> {
    check_span(t_span)?;
    let table = &intensity.theta;
    table.check_time(t_span.0)?;
    table.check_time(t_span.1)?;
    let lambda = intensity.free_rate();
    let epsilon = intensity.epsilon;
    let mut t = t_span.0;
    let mut y = x0;
    let mut k = table.block(t);
    loop {
        let end = table.times[k + 1].min(t_span.1);
        let lo = table.lines[k].eval(y).min(table.lines[k + 1].eval(y));
        if !(lo > 0.0 && lo.is_finite()) {
            return Err(Error::UnboundedRate {
                y,
                reason: format!("θ^ε falls to {lo:e} on [{}, {}]", table.times[k], table.times[k + 1]),
            });
        }
        // Far from the origin, jumps of size at most |y|/2 stay in {|x| ≥ |y|/2}
        // where θ is bounded by its outer supremum; only the rare longer jumps
        // need the global bound.
        let sup = table.block_sup[k];
        let reach = 0.5 * y.abs();
        let (p_far, near_sup) = if reach > 4.0 * epsilon {
            (epsilon / reach, table.outer_sup(k, reach))
        } else {
            (1.0, sup)
        };
        let near_rate = lambda * (1.0 - p_far) * near_sup / lo;
        let far_rate = lambda * p_far * sup / lo;
        let rate = near_rate + far_rate;
        let clock = Exp::new(rate).map_err(|_| Error::UnboundedRate {
            y,
            reason: format!("dominating rate {rate:e}"),
        })?;
        let dt = clock.sample(rng);
        if t + dt > end {
            if end >= t_span.1 {
                return Ok(y);
            }
            t = end;
            k += 1;
            continue;
        }
        t += dt;
        // U uniform on (0, p_far] gives |J| ≥ reach, on (p_far, 1] |J| < reach
        let far = rng.random::<f64>() * rate < far_rate;
        let v = 1.0 - rng.random::<f64>();
        let u = if far { p_far * v } else { p_far + (1.0 - p_far) * v };
        let jump = if rng.random::<bool>() {
            epsilon / u
        } else {
            -epsilon / u
        };
        let x = y + jump;
        let bound = if far { sup } else { near_sup };
        let accept = table.eval(x, t) * lo / (bound * table.eval(y, t));
        if accept > 1.0 + 1e-9 {
            return Err(Error::UnboundedRate {
                y,
                reason: format!("acceptance ratio {accept} above one"),
            });
        }
        if rng.random::<f64>() < accept {
            y = x;
            visit(t, x);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::quad::adaptive_simpson;
    use crate::numerics::Grid1D;

    fn bump_table() -> JumpIntensity {
        let g = Grid1D::new(-10.0, 10.0, 401).unwrap();
        let mk = |c: f64| LineFn::flat(g, g.points().map(|x| 1.0 + c * (-x * x / 4.0).exp()).collect()).unwrap();
        let t = ThetaTable::from_lines(vec![0.0, 0.5, 1.0], vec![mk(2.0), mk(1.0), mk(0.5)]).unwrap();
        JumpIntensity::new(0.3, t).unwrap()
    }

    #[test]
    fn unit_theta_gives_free_rate() {
        let g = Grid1D::new(-5.0, 5.0, 201).unwrap();
        let one = LineFn::constant(g, 1.0);
        let t = ThetaTable::from_lines(vec![0.0, 1.0], vec![one.clone(), one]).unwrap();
        let h = JumpIntensity::new(0.2, t).unwrap();
        for y in [-6.0, 0.0, 0.13, 4.9] {
            assert!((h.rate(0.5, y).unwrap() - 2.0 / (PI * 0.2)).abs() < 1e-10);
            assert_eq!(h.density(0.5, y, y + 0.1).unwrap(), 0.0);
            assert!((h.density(0.5, y, y + 1.0).unwrap() - 1.0 / PI).abs() < 1e-15);
        }
    }

    #[test]
    fn charge_vanishes() {
        let h = bump_table();
        for (t, y) in [(0.0, 0.0), (0.3, 1.1), (0.75, -2.4)] {
            let f = |x: f64| h.density(t, y, x).unwrap();
            let g = h.theta.grid();
            let mut direct = 0.0;
            for i in 0..g.n() - 1 {
                let (a, b) = (g.point(i), g.point(i + 1));
                for (lo, hi) in [(a, b.min(y - 0.3)), (a.max(y + 0.3), b)] {
                    if hi > lo {
                        direct += adaptive_simpson(&f, lo, hi, 1e-14);
                    }
                }
            }
            direct += half_line(&|r| f(g.x_min() - r), 0.0, 0.05) + half_line(&|r| f(g.x_max() + r), 0.0, 0.05);
            let charge = direct - h.rate(t, y).unwrap();
            assert!(charge.abs() < 1e-8, "charge {charge}");
            assert!(h.rate(t, y).unwrap() <= h.rate_bound(t, y).unwrap());
        }
    }

    #[test]
    fn interval_masses_add_up() {
        let h = bump_table();
        let a = h.interval_mass(0.2, 0.5, -3.0, 1.0).unwrap();
        let b = h.interval_mass(0.2, 0.5, 1.0, 4.0).unwrap();
        let c = h.interval_mass(0.2, 0.5, -3.0, 4.0).unwrap();
        assert!((a + b - c).abs() < 1e-12);
    }

    #[test]
    fn paths_are_valid_and_reproducible() {
        let h = bump_table();
        let base = RandomStream::new(11, 0);
        for i in 0..100 {
            let p = sample_conditioned_path(&h, 0.0, (0.0, 1.0), base.path(i)).unwrap();
            p.validate().unwrap();
            assert_eq!(p, sample_conditioned_path(&h, 0.0, (0.0, 1.0), base.path(i)).unwrap());
        }
        assert!(sample_conditioned_path(&h, 0.0, (0.0, 1.5), base).is_err());
    }

    #[test]
    fn vanishing_theta_is_reported() {
        let g = Grid1D::new(-5.0, 5.0, 101).unwrap();
        let z = LineFn::constant(g, 0.0);
        let t = ThetaTable::from_lines(vec![0.0, 1.0], vec![z.clone(), z]).unwrap();
        let h = JumpIntensity::new(0.2, t).unwrap();
        let e = sample_conditioned_path(&h, 0.0, (0.0, 1.0), RandomStream::new(1, 1)).unwrap_err();
        assert!(matches!(e, Error::UnboundedRate { .. }));
    }
}
