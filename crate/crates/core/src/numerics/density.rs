use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::grid::{Grid1D, GridFn};
use crate::error::{require_positive, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CauchyComponent {
    pub weight: f64,
    pub loc: f64,
    pub scale: f64,
}

/// Finite mixture of Cauchy laws, with closed-form density, CDF and sampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyMixture {
    pub components: Vec<CauchyComponent>,
}

pub fn cauchy_pdf(x: f64, loc: f64, scale: f64) -> f64 {
    let z = x - loc;
    scale / (PI * (scale * scale + z * z))
}

pub fn cauchy_cdf(x: f64, loc: f64, scale: f64) -> f64 {
    0.5 + ((x - loc) / scale).atan() / PI
}

/// `P(X > x)` computed without cancellation for large `x`.
pub fn cauchy_sf(x: f64, loc: f64, scale: f64) -> f64 {
    let z = (x - loc) / scale;
    if z > 0.0 {
        (1.0 / z).atan() / PI
    } else {
        0.5 - z.atan() / PI
    }
}

impl CauchyMixture {
    pub fn new(components: Vec<CauchyComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::param("components", "mixture needs at least one component"));
        }
        for c in &components {
            require_positive("weight", c.weight)?;
            require_positive("scale", c.scale)?;
            if !c.loc.is_finite() {
                return Err(Error::NonFinite("mixture location"));
            }
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        let components = components
            .into_iter()
            .map(|c| CauchyComponent {
                weight: c.weight / total,
                ..c
            })
            .collect();
        Ok(Self { components })
    }

    pub fn single(loc: f64, scale: f64) -> Result<Self> {
        Self::new(vec![CauchyComponent {
            weight: 1.0,
            loc,
            scale,
        }])
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * cauchy_pdf(x, c.loc, c.scale))
            .sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * cauchy_cdf(x, c.loc, c.scale))
            .sum()
    }

    pub fn sf(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * cauchy_sf(x, c.loc, c.scale))
            .sum()
    }

    /// `P(X < x)` computed without cancellation for very negative `x`.
    pub fn lower(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * cauchy_sf(2.0 * c.loc - x, c.loc, c.scale))
            .sum()
    }

    /// Every component propagated by the Cauchy semigroup for time `t`.
    pub fn propagated(&self, t: f64) -> CauchyMixture {
        CauchyMixture {
            components: self
                .components
                .iter()
                .map(|c| CauchyComponent {
                    scale: c.scale + t,
                    ..*c
                })
                .collect(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut u: f64 = rng.random();
        let mut chosen = &self.components[self.components.len() - 1];
        for c in &self.components {
            if u < c.weight {
                chosen = c;
                break;
            }
            u -= c.weight;
        }
        let v: f64 = rng.random();
        chosen.loc + chosen.scale * (PI * (v - 0.5)).tan()
    }

    /// Grid samples with the exact out-of-window mass as tail.
    pub fn on_grid(&self, grid: Grid1D) -> GridFn {
        let tail = self.lower(grid.x_min()) + self.sf(grid.x_max());
        GridFn::from_fn(grid, |x| self.pdf(x)).with_tail_mass(tail)
    }
}
