use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};
use crate::numerics::{integrate, CauchyComponent, CauchyMixture, Grid1D, GridFn, LineFn, TailShape};

/// Default mass tolerance for density-role grid functions.
pub const TOL_MASS: f64 = 1e-4;

/// Boundary densities `ρ(·,0)` and `ρ(·,T)`.
///
/// When a density is known in closed form as a Cauchy mixture it is kept
/// alongside the grid samples so that the solver can model its tails exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryData {
    pub rho0: GridFn,
    pub rho_t: GridFn,
    pub horizon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho0_mixture: Option<CauchyMixture>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_t_mixture: Option<CauchyMixture>,
}

impl BoundaryData {
    pub fn new(rho0: GridFn, rho_t: GridFn, horizon: f64, tol_mass: f64) -> Result<Self> {
        let b = BoundaryData {
            rho0,
            rho_t,
            horizon,
            rho0_mixture: None,
            rho_t_mixture: None,
        };
        b.validate(tol_mass)?;
        Ok(b)
    }

    pub fn from_mixtures(grid: Grid1D, rho0: CauchyMixture, rho_t: CauchyMixture, horizon: f64) -> Result<Self> {
        let b = BoundaryData {
            rho0: rho0.on_grid(grid),
            rho_t: rho_t.on_grid(grid),
            horizon,
            rho0_mixture: Some(rho0),
            rho_t_mixture: Some(rho_t),
        };
        b.validate(TOL_MASS)?;
        Ok(b)
    }

    /// `ρ0 = Cauchy(0,1)` and `ρT = Cauchy(0,1+T)`: the free evolution of `ρ0`.
    pub fn free(grid: Grid1D, horizon: f64) -> Result<Self> {
        require_positive("horizon", horizon)?;
        Self::from_mixtures(
            grid,
            CauchyMixture::single(0.0, 1.0)?,
            CauchyMixture::single(0.0, 1.0 + horizon)?,
            horizon,
        )
    }

    /// `ρ0 = Cauchy(0,1)`, `ρT = ½Cauchy(−3,½) + ½Cauchy(3,½)`.
    pub fn bimodal(grid: Grid1D, horizon: f64) -> Result<Self> {
        let target = CauchyMixture::new(vec![
            CauchyComponent {
                weight: 0.5,
                loc: -3.0,
                scale: 0.5,
            },
            CauchyComponent {
                weight: 0.5,
                loc: 3.0,
                scale: 0.5,
            },
        ])?;
        Self::from_mixtures(grid, CauchyMixture::single(0.0, 1.0)?, target, horizon)
    }

    /// Narrow Cauchy spikes of width `spike` at `y0` and `z_t`.
    pub fn pinned(grid: Grid1D, y0: f64, z_t: f64, horizon: f64, spike: f64) -> Result<Self> {
        Self::from_mixtures(
            grid,
            CauchyMixture::single(y0, spike)?,
            CauchyMixture::single(z_t, spike)?,
            horizon,
        )
    }

    pub fn grid(&self) -> Grid1D {
        self.rho0.grid
    }

    pub fn validate(&self, tol_mass: f64) -> Result<()> {
        require_positive("horizon", self.horizon)?;
        self.rho0.grid.check_same(&self.rho_t.grid)?;
        for (name, rho) in [("rho0", &self.rho0), ("rhoT", &self.rho_t)] {
            if let Some((i, v)) = rho
                .values
                .iter()
                .enumerate()
                .find(|(_, v)| !(**v > 0.0 && v.is_finite()))
            {
                return Err(Error::param(
                    "boundary",
                    format!(
                        "{name} must be strictly positive; value {v} at x = {}",
                        rho.grid.point(i)
                    ),
                ));
            }
            let m = integrate(rho);
            if (m - 1.0).abs() > tol_mass {
                return Err(Error::param(
                    "boundary",
                    format!("{name} integrates to {m}, outside 1 ± {tol_mass}"),
                ));
            }
        }
        Ok(())
    }

    /// Time-reversed problem: `(ρT, ρ0)`.
    pub fn swapped(&self) -> Self {
        BoundaryData {
            rho0: self.rho_t.clone(),
            rho_t: self.rho0.clone(),
            horizon: self.horizon,
            rho0_mixture: self.rho_t_mixture.clone(),
            rho_t_mixture: self.rho0_mixture.clone(),
        }
    }

    pub(crate) fn line(rho: &GridFn, mixture: &Option<CauchyMixture>) -> Result<LineFn> {
        let shape = match mixture {
            Some(m) => TailShape::Mixture { mixture: m.clone() },
            None => TailShape::InverseSquare,
        };
        LineFn::with_shapes(rho.grid, rho.values.clone(), shape.clone(), shape)
    }

    pub(crate) fn rho0_line(&self) -> Result<LineFn> {
        Self::line(&self.rho0, &self.rho0_mixture)
    }

    pub(crate) fn rho_t_line(&self) -> Result<LineFn> {
        Self::line(&self.rho_t, &self.rho_t_mixture)
    }
}
