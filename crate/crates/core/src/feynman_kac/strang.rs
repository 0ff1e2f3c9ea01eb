use std::sync::Arc;

use crate::error::{require_positive, Error, Result};
use crate::feynman_kac::potential::Potential;
use crate::kernels::{Column, Propagator};
use crate::numerics::{Grid1D, LineFn, Side, TailShape};

/// Feynman–Kac propagator `e^{-τ(H_0 + V)}` by Strang splitting:
/// `e^{-Vh/2} K_0(h) e^{-Vh/2}` per step, with the free kernel `K_0` exact.
///
/// `V` is taken constant beyond the window at its edge values.
pub struct StrangPropagator {
    base: Arc<dyn Propagator>,
    potential: Potential,
    dt: f64,
    v: Vec<f64>,
    v_left: f64,
    v_right: f64,
}

impl StrangPropagator {
    /// `base_rate` is the jump rate of the free kernel (`2/(πε)` for step
    /// kernels, `0` for the exact Cauchy kernel); the step must satisfy
    /// `dt·(base_rate + sup V) ≤ 0.5`.
    pub fn new(base: Arc<dyn Propagator>, base_rate: f64, potential: Potential, dt: f64) -> Result<Self> {
        potential.validate()?;
        require_positive("dt", dt)?;
        let grid = base.grid();
        let sup_v = potential.sup_on(grid.x_min(), grid.x_max());
        let load = base_rate + sup_v;
        if dt * load > 0.5 + 1e-12 {
            return Err(Error::Stability {
                dt,
                suggested: 0.5 / load,
            });
        }
        let v: Vec<f64> = grid.points().map(|x| potential.eval(x)).collect();
        Ok(Self {
            v_left: v[0],
            v_right: v[v.len() - 1],
            v,
            base,
            potential,
            dt,
        })
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn steps(&self, tau: f64) -> (usize, f64) {
        let n = ((tau / self.dt) - 1e-9).ceil().max(1.0) as usize;
        (n, tau / n as f64)
    }

    fn half_kick(&self, u: &mut LineFn, h: f64) {
        for (x, v) in u.values.iter_mut().zip(&self.v) {
            *x *= (-0.5 * h * v).exp();
        }
        u.left.scale *= (-0.5 * h * self.v_left).exp();
        u.right.scale *= (-0.5 * h * self.v_right).exp();
    }
}

impl Propagator for StrangPropagator {
    fn grid(&self) -> Grid1D {
        self.base.grid()
    }

    fn propagate(&self, u: &LineFn, tau: f64) -> Result<LineFn> {
        if tau == 0.0 {
            return Ok(u.clone());
        }
        let (n, h) = self.steps(tau);
        let mut cur = u.clone();
        for _ in 0..n {
            self.half_kick(&mut cur, h);
            cur = self.base.propagate(&cur, h)?;
            self.half_kick(&mut cur, h);
        }
        Ok(cur)
    }

    fn column(&self, tau: f64, j: usize) -> Result<Column> {
        let grid = self.grid();
        if tau == 0.0 {
            return self.base.column(0.0, j);
        }
        let (n, h) = self.steps(tau);
        let kick_j = (-0.5 * h * self.v[j]).exp();
        let base_col = self.base.column(h, j)?;
        let mut atom = 1.0;
        let mut dens = LineFn::with_shapes(
            grid,
            vec![0.0; grid.n()],
            TailShape::InverseSquare,
            TailShape::InverseSquare,
        )?;
        for _ in 0..n {
            atom *= kick_j;
            self.half_kick(&mut dens, h);
            let mut next = self.base.propagate(&dens, h)?;
            for (o, c) in next.values.iter_mut().zip(&base_col.density) {
                *o += atom * c;
            }
            atom *= base_col.atom;
            next.refit_tails();
            self.half_kick(&mut next, h);
            atom *= kick_j;
            dens = next;
        }
        Ok(Column {
            atom,
            density: dens.values,
        })
    }

    /// Beyond the window `V` is constant, so the tail weight of the free
    /// pairing is damped by `e^{-τV}` at that edge value.
    fn tail_moment(&self, u: &LineFn, tau: f64, shape: &TailShape, side: Side) -> Result<f64> {
        let v = match side {
            Side::Left => self.v_left,
            Side::Right => self.v_right,
        };
        Ok((-tau * v).exp() * self.base.tail_moment(u, tau, shape, side)?)
    }

    fn density(&self, tau: f64, y: f64, x: f64) -> Result<f64> {
        let grid = self.grid();
        if !grid.contains(y) || !grid.contains(x) {
            return Err(Error::param(
                "y",
                "perturbed kernel is only available inside the window",
            ));
        }
        let (j, a) = grid.locate(y);
        let at = |col: &Column| {
            let (i, b) = grid.locate(x);
            (1.0 - b) * col.density[i] + b * col.density[i + 1]
        };
        let c0 = self.column(tau, j)?;
        if a < 1e-9 {
            return Ok(at(&c0));
        }
        let c1 = self.column(tau, j + 1)?;
        Ok((1.0 - a) * at(&c0) + a * at(&c1))
    }

    fn atom(&self, tau: f64, y: f64) -> Result<f64> {
        Ok(self.base.atom(tau, y)? * (-tau * self.potential.eval(y)).exp())
    }
}
