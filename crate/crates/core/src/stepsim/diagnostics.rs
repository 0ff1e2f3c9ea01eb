use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{char_fn_cauchy, char_fn_step, StepPropagator, TruncatedJumpDensity};
use crate::numerics::quad::half_line;
use crate::numerics::{trapezoid, GridFn};
use crate::schroedinger::{
    interpolating_density, solve_with_options, transition_density, transition_row, BoundaryData, KernelSpec,
    SchroedingerSolution, SolveOptions,
};

/// Outcome of [`kolmogorov_residual`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KolmogorovResidual {
    pub ds: f64,
    /// Sup over the inner half of the window.
    pub sup: f64,
    /// `h_ε(s,y)`.
    pub rate: f64,
}

fn step_epsilon(solution: &SchroedingerSolution) -> Result<f64> {
    solution
        .kernel
        .epsilon()
        .filter(|_| matches!(solution.kernel, KernelSpec::TruncatedStep { .. }))
        .ok_or_else(|| Error::Unsupported("this diagnostic needs an unperturbed step kernel".into()))
}

/// Residual of the backward equation
/// `∂_s p_ε(y,s,x,t) = −∫p_ε(z,s,x,t) h̄_ε(s,y,dz)` for the density part of
/// `p_ε`, with `∂_s` a centred difference of step `ds`.
///
/// `y` must be a grid node. The `z`-integral runs over the offset grid with
/// cell-averaged `q_ε`, the same discretisation the step kernel is built on;
/// the charge's atom at `z = y` enters as `h_ε(s,y)·p_ε(y,s,x,t)`. The sup is
/// taken over grid points with `|x − y|` at most a quarter of the window width,
/// away from the window truncation.
pub fn kolmogorov_residual(
    solution: &SchroedingerSolution,
    y: f64,
    s: f64,
    t: f64,
    ds: f64,
) -> Result<KolmogorovResidual> {
    let epsilon = step_epsilon(solution)?;
    if !(ds > 0.0 && s - ds >= 0.0 && s + ds < t && t <= solution.horizon()) {
        return Err(Error::param(
            "ds",
            format!("need 0 ≤ s − ds and s + ds < t ≤ T, got s = {s}, t = {t}, ds = {ds}"),
        ));
    }
    let grid = solution.grid();
    let n = grid.n();
    let dx = grid.dx();
    let j = grid.nearest(y);
    if (grid.point(j) - y).abs() > 1e-9 * dx {
        return Err(Error::param("y", format!("{y} is not a grid node")));
    }
    let prop = StepPropagator::new(grid, epsilon, crate::schroedinger::TOL_SERIES)?;
    let lambda = prop.rate();
    let tau = t - s;
    let kernel = |tau: f64| prop.kernel(tau).map(|k| k.ac_part.values);
    let (k_mid, k_early, k_late) = (kernel(tau)?, kernel(tau + ds)?, kernel(tau - ds)?);
    // cell averages of q_ε on the offset grid (centre index n − 1)
    let jump = TruncatedJumpDensity::new(epsilon)?.jump_law_on_grid(grid.offset_grid());
    let q: Vec<f64> = jump.values.iter().map(|v| lambda * v).collect();

    let theta_t = solution.theta_line(t)?;
    let theta_s = solution.theta_line(s)?;
    let th_y = |sp: f64| solution.theta_line(sp).map(|l| l.eval(y));
    let (ty, ty_early, ty_late) = (theta_s.eval(y), th_y(s - ds)?, th_y(s + ds)?);
    if !(ty > 0.0 && ty_early > 0.0 && ty_late > 0.0) {
        return Err(Error::NonPositive {
            context: format!("θ^ε({y}, ·) near s = {s}"),
            value: ty.min(ty_early).min(ty_late),
        });
    }

    // h_ε(s,y) over the window plus both tails of θ
    let mut flux = 0.0;
    for (m, th) in theta_s.values.iter().enumerate() {
        flux += q[m + n - 1 - j] * th * dx;
    }
    let qc = |z: f64| {
        let d = z - y;
        if d.abs() > epsilon {
            1.0 / (std::f64::consts::PI * d * d)
        } else {
            0.0
        }
    };
    let edge_half = 0.5 * dx;
    flux += half_line(
        &|r| qc(grid.x_min() - edge_half - r) * theta_s.left.value(grid.x_min() - edge_half - r),
        0.0,
        dx,
    );
    flux += half_line(
        &|r| qc(grid.x_max() + edge_half + r) * theta_s.right.value(grid.x_max() + edge_half + r),
        0.0,
        dx,
    );
    let rate = flux / ty;

    let atom = (-lambda * tau).exp();
    let off = |d: isize| -> Option<usize> {
        let i = d + (n as isize - 1);
        (0..(2 * n - 1) as isize).contains(&i).then_some(i as usize)
    };
    let reach = (n / 4) as isize;
    let mut sup: f64 = 0.0;
    for i in 0..n {
        let d = i as isize - j as isize;
        if d.abs() > reach {
            continue;
        }
        let th_x = theta_t.values[i];
        let c = off(d).expect("inside the offset grid");
        // s + ds shortens the remaining time to τ − ds
        let lhs = (k_late[c] / ty_late - k_early[c] / ty_early) * th_x / (2.0 * ds);
        let mut conv = 0.0;
        for (e, k) in k_mid.iter().enumerate() {
            let dp = e as isize - (n as isize - 1);
            if let Some(qi) = off(d - dp) {
                conv += k * q[qi];
            }
        }
        conv *= dx;
        let p_mid = k_mid[c] * th_x / ty;
        let integral = th_x / ty * (conv + atom * q[c]) - rate * p_mid;
        sup = sup.max((lhs + integral).abs());
    }
    Ok(KolmogorovResidual { ds, sup, rate })
}

/// `p_ε(y,s,R,t)`: atom plus density mass of the conditioned transition.
pub fn transition_mass(solution: &SchroedingerSolution, y: f64, s: f64, t: f64) -> Result<f64> {
    Ok(transition_row(solution, y, s, t)?.mass())
}

/// A point `(y, s, x, t)` at which transition densities are compared.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub y: f64,
    pub s: f64,
    pub x: f64,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub eps: f64,
    pub cf_sup_err: f64,
    pub rho_l1_sup: f64,
    pub p_max_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("eps,cf_sup_err,rho_l1_sup,p_max_err\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{:e},{:e},{:e}", r.eps, r.cf_sup_err, r.rho_l1_sup, r.p_max_err);
        }
        s
    }

    /// Whether each column is nonincreasing down the rows, allowing each
    /// entry to exceed its predecessor by the factor `1 + slack`.
    pub fn monotone(&self, slack: f64) -> [bool; 3] {
        let col = |f: fn(&ConvergenceRow) -> f64| self.rows.windows(2).all(|w| f(&w[1]) <= (1.0 + slack) * f(&w[0]));
        [col(|r| r.cf_sup_err), col(|r| r.rho_l1_sup), col(|r| r.p_max_err)]
    }
}

/// Window L¹ distance plus the difference of the tail masses.
fn density_l1(a: &GridFn, b: &GridFn) -> Result<f64> {
    a.grid.check_same(&b.grid)?;
    let diff: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).collect();
    Ok(trapezoid(&diff, a.grid.dx()) + (a.tail_mass - b.tail_mass).abs())
}

/// Solves the boundary problem on the step kernel for each cutoff.
pub fn solve_family(
    boundary: &BoundaryData,
    eps_list: &[f64],
    opts: SolveOptions,
) -> Result<Vec<SchroedingerSolution>> {
    eps_list
        .iter()
        .map(|&epsilon| solve_with_options(boundary, &KernelSpec::TruncatedStep { epsilon }, opts))
        .collect()
}

/// Convergence of the step interpolations in `family` to `reference` (the
/// Cauchy interpolation of the same boundary data).
///
/// Per cutoff: the characteristic-function gap over `p_grid × t_grid`, the sup
/// over `t_grid` of the L¹ distance of `ρ_ε(·,t)` and `ρ(·,t)`, and the largest
/// transition-density gap over `probes`.
pub fn convergence_report(
    reference: &SchroedingerSolution,
    family: &[SchroedingerSolution],
    p_grid: &[f64],
    t_grid: &[f64],
    probes: &[Probe],
) -> Result<ConvergenceReport> {
    let rho_ref = t_grid
        .iter()
        .map(|&t| interpolating_density(reference, t))
        .collect::<Result<Vec<_>>>()?;
    let p_ref = probes
        .iter()
        .map(|p| transition_density(reference, p.y, p.s, p.x, p.t))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(family.len());
    for sol in family {
        let eps = step_epsilon(sol)?;
        sol.grid().check_same(&reference.grid()).map_err(|_| {
            Error::GridMismatch(format!(
                "solution for ε = {eps} lives on a different grid from the reference"
            ))
        })?;
        let mut cf: f64 = 0.0;
        for &p in p_grid {
            for &t in t_grid {
                cf = cf.max((char_fn_step(eps, p, t)? - char_fn_cauchy(p, t)?).abs());
            }
        }
        let mut rho: f64 = 0.0;
        for (&t, r) in t_grid.iter().zip(&rho_ref) {
            rho = rho.max(density_l1(&interpolating_density(sol, t)?, r)?);
        }
        let mut pe: f64 = 0.0;
        for (p, r) in probes.iter().zip(&p_ref) {
            pe = pe.max((transition_density(sol, p.y, p.s, p.x, p.t)? - r).abs());
        }
        rows.push(ConvergenceRow {
            eps,
            cf_sup_err: cf,
            rho_l1_sup: rho,
            p_max_err: pe,
        });
    }
    Ok(ConvergenceReport { rows })
}
