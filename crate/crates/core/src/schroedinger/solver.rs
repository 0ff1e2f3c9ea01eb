use std::fmt;
use std::sync::Arc;

use crate::error::{require_positive, Error, Result};
use crate::kernels::Propagator;
use crate::numerics::quad::half_line;
use crate::numerics::{integrate, trapezoid, Grid1D, GridFn, LineFn, Side, TailShape};
use crate::schroedinger::boundary::BoundaryData;
use crate::schroedinger::spec::{KernelSpec, TOL_SERIES};

/// Solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tol_fit: f64,
    pub max_iter: usize,
    pub tol_series: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol_fit: 1e-8,
            max_iter: 500,
            tol_series: TOL_SERIES,
        }
    }
}

/// The Schrödinger pair `(f, g)` for given boundary data and kernel.
#[derive(Clone)]
pub struct SchroedingerSolution {
    pub f: GridFn,
    pub g: GridFn,
    pub kernel: KernelSpec,
    pub boundary: BoundaryData,
    /// Final L¹ marginal misfit.
    pub residual: f64,
    pub iterations: usize,
    f_line: LineFn,
    g_line: LineFn,
    propagator: Arc<dyn Propagator>,
}

impl fmt::Debug for SchroedingerSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SchroedingerSolution")
            .field("kernel", &self.kernel)
            .field("residual", &self.residual)
            .field("iterations", &self.iterations)
            .finish_non_exhaustive()
    }
}

type Shapes = (TailShape, TailShape);

/// Mass of a density beyond the window on each side.
fn side_masses(rho: &LineFn) -> Result<[f64; 2]> {
    let g = rho.grid;
    let mut out = [0.0; 2];
    for (k, (side, edge)) in [(Side::Left, g.x_min()), (Side::Right, g.x_max())]
        .into_iter()
        .enumerate()
    {
        let tail = rho.tail(side);
        out[k] = tail.scale
            * tail
                .shape
                .mass_beyond(edge, side)
                .ok_or_else(|| Error::param("boundary", "density tails must be integrable"))?;
    }
    Ok(out)
}

/// `∫_side shape·(K_T u)` for the two tails of the function being fitted.
fn tail_moments(propagator: &dyn Propagator, u: &LineFn, horizon: f64, shapes: &Shapes) -> Result<[f64; 2]> {
    Ok([
        propagator.tail_moment(u, horizon, &shapes.0, Side::Left)?,
        propagator.tail_moment(u, horizon, &shapes.1, Side::Right)?,
    ])
}

/// Marginal fit: pointwise on the window, and in mass for each tail, whose
/// shape stays fixed.
fn fit(
    rho: &LineFn,
    den: &LineFn,
    shapes: &Shapes,
    masses: [f64; 2],
    moments: [f64; 2],
    context: &'static str,
) -> Result<LineFn> {
    let mut u = ratio(rho, den, shapes.clone(), context)?;
    for (k, side) in [Side::Left, Side::Right].into_iter().enumerate() {
        let scale = if masses[k] == 0.0 {
            0.0
        } else if moments[k] > 0.0 && moments[k].is_finite() {
            masses[k] / moments[k]
        } else {
            return Err(Error::NonPositive {
                context: format!("{context} tail moment ({side:?})"),
                value: moments[k],
            });
        };
        match side {
            Side::Left => u.left.scale = scale,
            Side::Right => u.right.scale = scale,
        }
    }
    Ok(u)
}

fn tail_misfit(u: &LineFn, moments: [f64; 2], masses: [f64; 2]) -> f64 {
    (u.left.scale * moments[0] - masses[0]).abs() + (u.right.scale * moments[1] - masses[1]).abs()
}

fn ratio(num: &LineFn, den: &LineFn, shapes: Shapes, context: &'static str) -> Result<LineFn> {
    let mut values = Vec::with_capacity(num.values.len());
    for (i, (a, b)) in num.values.iter().zip(&den.values).enumerate() {
        if !(*b > 0.0) || !b.is_finite() {
            return Err(Error::NonPositive {
                context: format!("{context} at x = {}", den.grid.point(i)),
                value: *b,
            });
        }
        values.push(a / b);
    }
    LineFn::with_shapes(num.grid, values, shapes.0, shapes.1)
}

/// `lim x²ρ(x)` on one side.
fn tail_weight(rho: &LineFn, side: Side) -> f64 {
    let x = match side {
        Side::Left => -1e8,
        Side::Right => 1e8,
    };
    rho.eval(x) * x * x
}

/// Tail shapes of `(f, g)` on one side. With `ρ0 ~ A/x²` and `ρT ~ B/x²`,
/// the balance of `fθ = ρ0`, `gθ* = ρT` gives `g` flat and `f ~ ρ0` when
/// `A < B`, the mirror image when `A > B`, and `f, g ~ 1/|x|` when `A = B`.
fn tail_shapes(rho0: &LineFn, rho_t: &LineFn, side: Side) -> (TailShape, TailShape) {
    let a = tail_weight(rho0, side);
    let b = tail_weight(rho_t, side);
    let own = |r: &LineFn| r.tail(side).shape.clone();
    if (a - b).abs() <= 1e-3 * a.max(b) {
        (TailShape::InverseLinear, TailShape::InverseLinear)
    } else if a < b {
        (own(rho0), TailShape::Flat)
    } else {
        (TailShape::Flat, own(rho_t))
    }
}

fn l1(a: &[f64], b: &[f64], dx: f64) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect();
    trapezoid(&d, dx)
}

fn product(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

/// Iterative proportional fitting for `m(x,y) = f(x)k(x,0,y,T)g(y)`:
/// from `g ≡ 1`, alternate `f ← ρ0/θ(·,0)` and `g ← ρT/θ*(·,T)` until the
/// L¹ misfit of the time-0 marginal (the time-T marginal is fitted exactly
/// by the last update) is at most `tol_fit`. The gauge is `∫f = 1`.
pub fn solve_system(
    boundary: &BoundaryData,
    kernel: &KernelSpec,
    tol_fit: f64,
    max_iter: usize,
) -> Result<SchroedingerSolution> {
    solve_with_options(
        boundary,
        kernel,
        SolveOptions {
            tol_fit,
            max_iter,
            ..SolveOptions::default()
        },
    )
}

pub fn solve_with_options(
    boundary: &BoundaryData,
    kernel: &KernelSpec,
    opts: SolveOptions,
) -> Result<SchroedingerSolution> {
    let propagator = kernel.propagator(boundary.grid(), opts.tol_series)?;
    solve_with_propagator(boundary, kernel.clone(), propagator, opts)
}

/// [`solve_with_options`] on a prebuilt propagator (which must realise `kernel`).
pub fn solve_with_propagator(
    boundary: &BoundaryData,
    kernel: KernelSpec,
    propagator: Arc<dyn Propagator>,
    opts: SolveOptions,
) -> Result<SchroedingerSolution> {
    require_positive("tol_fit", opts.tol_fit)?;
    if opts.max_iter == 0 {
        return Err(Error::param("max_iter", "must be at least 1"));
    }
    let grid = boundary.grid();
    grid.check_same(&propagator.grid())?;
    let horizon = boundary.horizon;
    let rho0 = boundary.rho0_line()?;
    let rho_t = boundary.rho_t_line()?;
    let dx = grid.dx();

    let (left_f, left_g) = tail_shapes(&rho0, &rho_t, Side::Left);
    let (right_f, right_g) = tail_shapes(&rho0, &rho_t, Side::Right);
    let shapes_f = (left_f, right_f);
    let shapes_g = (left_g, right_g);
    let m0 = side_masses(&rho0)?;
    let m_t = side_masses(&rho_t)?;
    let mut g = LineFn::with_shapes(grid, vec![1.0; grid.n()], shapes_g.0.clone(), shapes_g.1.clone())?;
    let mut theta0 = propagator.propagate(&g, horizon)?;
    let mut moments0 = tail_moments(&*propagator, &g, horizon, &shapes_f)?;
    let mut f;
    let mut residual;
    let mut it = 0;
    loop {
        it += 1;
        f = fit(&rho0, &theta0, &shapes_f, m0, moments0, "θ(·,0)")?;
        let theta_t = propagator.propagate(&f, horizon)?;
        let moments_t = tail_moments(&*propagator, &f, horizon, &shapes_g)?;
        g = fit(&rho_t, &theta_t, &shapes_g, m_t, moments_t, "θ*(·,T)")?;
        theta0 = propagator.propagate(&g, horizon)?;
        moments0 = tail_moments(&*propagator, &g, horizon, &shapes_f)?;
        residual = l1(&product(&f.values, &theta0.values), &rho0.values, dx) + tail_misfit(&f, moments0, m0);
        if !residual.is_finite() {
            return Err(Error::NonFinite("marginal residual"));
        }
        if residual <= opts.tol_fit {
            break;
        }
        if it >= opts.max_iter {
            return Err(Error::NotConverged {
                iterations: it,
                residual,
            });
        }
    }
    let gauge = line_integral(&f);
    f.scale(1.0 / gauge);
    g.scale(gauge);
    Ok(SchroedingerSolution {
        f: line_to_gridfn(&f),
        g: line_to_gridfn(&g),
        kernel,
        boundary: boundary.clone(),
        residual,
        iterations: it,
        f_line: f,
        g_line: g,
        propagator,
    })
}

fn line_integral(f: &LineFn) -> f64 {
    trapezoid(&f.values, f.grid.dx()) + f.tail_mass().unwrap_or(0.0)
}

fn line_to_gridfn(f: &LineFn) -> GridFn {
    GridFn {
        grid: f.grid,
        values: f.values.clone(),
        tail_mass: f.tail_mass().unwrap_or(0.0).max(0.0),
    }
}

impl SchroedingerSolution {
    pub fn grid(&self) -> Grid1D {
        self.f.grid
    }

    pub fn horizon(&self) -> f64 {
        self.boundary.horizon
    }

    pub fn propagator(&self) -> &Arc<dyn Propagator> {
        &self.propagator
    }

    pub fn f_line(&self) -> &LineFn {
        &self.f_line
    }

    pub fn g_line(&self) -> &LineFn {
        &self.g_line
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.horizon()).contains(&t) {
            return Err(Error::TimeOutOfRange {
                t,
                horizon: self.horizon(),
            });
        }
        Ok(())
    }

    /// `θ(·,t) = ∫k(·,t,y,T)g(y)dy` on the whole line.
    pub fn theta_line(&self, t: f64) -> Result<LineFn> {
        self.check_time(t)?;
        self.propagator.propagate(&self.g_line, self.horizon() - t)
    }

    /// `θ*(·,s) = ∫k(x,0,·,s)f(x)dx` on the whole line.
    pub fn theta_star_line(&self, s: f64) -> Result<LineFn> {
        self.check_time(s)?;
        self.propagator.propagate(&self.f_line, s)
    }

    /// Rescales `(f, g) → (c·f, g/c)`; all derived quantities are unchanged.
    pub fn rescaled(&self, c: f64) -> Result<SchroedingerSolution> {
        require_positive("c", c)?;
        let mut s = self.clone();
        s.f_line.scale(c);
        s.g_line.scale(1.0 / c);
        s.f = line_to_gridfn(&s.f_line);
        s.g = line_to_gridfn(&s.g_line);
        Ok(s)
    }
}

/// `θ(x,t)`; `θ(·,T) = g`.
pub fn theta(solution: &SchroedingerSolution, x: f64, t: f64) -> Result<f64> {
    solution.check_time(t)?;
    if t == solution.horizon() {
        return Ok(solution.g_line.eval(x));
    }
    Ok(solution.theta_line(t)?.eval(x))
}

/// `θ*(y,s)`; `θ*(·,0) = f`.
pub fn theta_star(solution: &SchroedingerSolution, y: f64, s: f64) -> Result<f64> {
    solution.check_time(s)?;
    if s == 0.0 {
        return Ok(solution.f_line.eval(y));
    }
    Ok(solution.theta_star_line(s)?.eval(y))
}

/// `θ` on the grid at each of `times`.
pub fn theta_field(solution: &SchroedingerSolution, times: &[f64]) -> Result<Vec<GridFn>> {
    times
        .iter()
        .map(|&t| solution.theta_line(t).map(|l| line_to_gridfn(&l).with_tail_mass(0.0)))
        .collect()
}

/// Conditioned transition density `p(y,s,x,t) = k(y,s,x,t)θ(x,t)/θ(y,s)`
/// (density part; see [`transition_atom`] for step kernels).
pub fn transition_density(solution: &SchroedingerSolution, y: f64, s: f64, x: f64, t: f64) -> Result<f64> {
    if s >= t {
        return Err(Error::DegenerateTime { s, t });
    }
    solution.check_time(s)?;
    solution.check_time(t)?;
    let k = solution.propagator.density(t - s, y, x)?;
    Ok(k * theta(solution, x, t)? / theta(solution, y, s)?)
}

/// Weight of the atom of `p(y,s,·,t)` at `x = y` (zero for the Cauchy kernel).
pub fn transition_atom(solution: &SchroedingerSolution, y: f64, s: f64, t: f64) -> Result<f64> {
    if s >= t {
        return Err(Error::DegenerateTime { s, t });
    }
    solution.check_time(t)?;
    let a = solution.propagator.atom(t - s, y)?;
    if a == 0.0 {
        return Ok(0.0);
    }
    Ok(a * theta(solution, y, t)? / theta(solution, y, s)?)
}

/// `ρ(·,t) = θ(·,t)θ*(·,t)` with the analytic out-of-window mass as tail.
pub fn interpolating_density(solution: &SchroedingerSolution, t: f64) -> Result<GridFn> {
    let th = solution.theta_line(t)?;
    let ts = solution.theta_star_line(t)?;
    Ok(density_from_pair(&th, &ts))
}

pub(crate) fn density_from_pair(theta: &LineFn, theta_star: &LineFn) -> GridFn {
    let grid = theta.grid;
    let values = product(&theta.values, &theta_star.values);
    let mut tail = 0.0;
    for (side, edge) in [(Side::Left, grid.x_min()), (Side::Right, grid.x_max())] {
        let a = theta.tail(side);
        let b = theta_star.tail(side);
        let m = match (&a.shape, &b.shape) {
            (TailShape::Flat, TailShape::Flat) => None,
            (TailShape::Flat, s) | (s, TailShape::Flat) => s.mass_beyond(edge, side).map(|m| a.scale * b.scale * m),
            _ => {
                let (h0, sign) = match side {
                    Side::Left => (-edge, -1.0),
                    Side::Right => (edge, 1.0),
                };
                Some(half_line(&|y| a.value(sign * y) * b.value(sign * y), h0, grid.dx()))
            }
        };
        tail += m.unwrap_or(0.0);
    }
    GridFn {
        grid,
        values,
        tail_mass: tail.max(0.0),
    }
}

/// L¹ misfit of both marginals of `m(x,y) = f(x)k(x,0,y,T)g(y)`, with the
/// tails counted by their masses.
pub fn marginal_residuals(solution: &SchroedingerSolution) -> Result<(f64, f64)> {
    let t = solution.horizon();
    let dx = solution.grid().dx();
    let prop = &*solution.propagator;
    let (f, g) = (&solution.f_line, &solution.g_line);
    let theta0 = solution.theta_line(0.0)?;
    let theta_t = solution.theta_star_line(t)?;
    let m0 = product(&f.values, &theta0.values);
    let mt = product(&g.values, &theta_t.values);
    let shapes = |u: &LineFn| (u.left.shape.clone(), u.right.shape.clone());
    let tails0 = tail_misfit(
        f,
        tail_moments(prop, g, t, &shapes(f))?,
        side_masses(&solution.boundary.rho0_line()?)?,
    );
    let tails_t = tail_misfit(
        g,
        tail_moments(prop, f, t, &shapes(g))?,
        side_masses(&solution.boundary.rho_t_line()?)?,
    );
    Ok((
        l1(&m0, &solution.boundary.rho0.values, dx) + tails0,
        l1(&mt, &solution.boundary.rho_t.values, dx) + tails_t,
    ))
}

/// Total mass of `ρ(·,t)`.
pub fn density_mass(solution: &SchroedingerSolution, t: f64) -> Result<f64> {
    Ok(integrate(&interpolating_density(solution, t)?))
}

/// `p(y,s,·,t)` on the grid: the atom at `x = y` and the density part.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRow {
    pub atom: f64,
    pub density: GridFn,
}

impl TransitionRow {
    pub fn mass(&self) -> f64 {
        self.atom + integrate(&self.density)
    }
}

/// [`transition_density`] for all grid `x` at once.
pub fn transition_row(solution: &SchroedingerSolution, y: f64, s: f64, t: f64) -> Result<TransitionRow> {
    if s >= t {
        return Err(Error::DegenerateTime { s, t });
    }
    let th_t = solution.theta_line(t)?;
    let th_s = solution.theta_line(s)?;
    let denom = th_s.eval(y);
    if !(denom > 0.0) {
        return Err(Error::NonPositive {
            context: format!("θ({y}, {s})"),
            value: denom,
        });
    }
    let p = solution.propagator();
    let grid = solution.grid();
    let mut values = Vec::with_capacity(grid.n());
    for (x, th) in grid.points().zip(&th_t.values) {
        values.push(p.density(t - s, y, x)? * th / denom);
    }
    // mass beyond the window; kernels known only inside it (perturbed ones)
    // are replaced there by their common Cauchy tail
    let tau = t - s;
    let k = |x: f64| {
        p.density(tau, y, x)
            .unwrap_or_else(|_| crate::kernels::cauchy_profile(tau, x - y))
    };
    let h0 = 0.25 * tau.min(grid.dx());
    let tail = half_line(&|r| k(grid.x_min() - r) * th_t.left.value(grid.x_min() - r), 0.0, h0)
        + half_line(&|r| k(grid.x_max() + r) * th_t.right.value(grid.x_max() + r), 0.0, h0);
    let atom = p.atom(tau, y)? * th_t.eval(y) / denom;
    Ok(TransitionRow {
        atom,
        density: GridFn {
            grid,
            values,
            tail_mass: tail / denom,
        },
    })
}
