//! Functions on the whole line: grid values inside the window plus a tail
//! model on each side.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::density::CauchyMixture;
use super::grid::{Grid1D, GridFn};
use crate::error::{Error, Result};

/// Shape of a function beyond the window edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailShape {
    /// Constant (bounded, asymptotically flat functions such as `g` and `θ`).
    Flat,
    /// `1/(1+x²)` decay, the generic Cauchy-type density tail.
    InverseSquare,
    /// `1/(1+|x|)` decay, between flat and integrable.
    InverseLinear,
    /// An exactly known density.
    Mixture { mixture: CauchyMixture },
}

impl TailShape {
    pub fn profile(&self, x: f64) -> f64 {
        match self {
            TailShape::Flat => 1.0,
            TailShape::InverseSquare => 1.0 / (1.0 + x * x),
            TailShape::InverseLinear => 1.0 / (1.0 + x.abs()),
            TailShape::Mixture { mixture } => mixture.pdf(x),
        }
    }

    /// `∫_edge^∞ profile` (right) or `∫_-∞^edge profile` (left); `None` when infinite.
    pub fn mass_beyond(&self, edge: f64, side: Side) -> Option<f64> {
        match (self, side) {
            (TailShape::Flat | TailShape::InverseLinear, _) => None,
            (TailShape::InverseSquare, Side::Right) => Some(0.5 * PI - edge.atan()),
            (TailShape::InverseSquare, Side::Left) => Some(0.5 * PI + edge.atan()),
            (TailShape::Mixture { mixture }, Side::Right) => Some(mixture.sf(edge)),
            (TailShape::Mixture { mixture }, Side::Left) => Some(mixture.lower(edge)),
        }
    }

    /// Shape after Cauchy-type propagation for time `t`.
    pub fn propagated(&self, t: f64) -> TailShape {
        match self {
            TailShape::Mixture { mixture } => TailShape::Mixture {
                mixture: mixture.propagated(t),
            },
            other => other.clone(),
        }
    }

    /// Stable key for caches.
    pub fn key(&self) -> String {
        match self {
            TailShape::Flat => "flat".into(),
            TailShape::InverseSquare => "inv2".into(),
            TailShape::InverseLinear => "inv1".into(),
            TailShape::Mixture { mixture } => {
                let mut s = String::from("mix");
                for c in &mixture.components {
                    s.push_str(&format!(
                        ":{:x}/{:x}/{:x}",
                        c.weight.to_bits(),
                        c.loc.to_bits(),
                        c.scale.to_bits()
                    ));
                }
                s
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tail {
    pub shape: TailShape,
    pub scale: f64,
}

impl Tail {
    pub fn flat(value: f64) -> Self {
        Tail {
            shape: TailShape::Flat,
            scale: value,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.scale * self.shape.profile(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineFn {
    pub grid: Grid1D,
    pub values: Vec<f64>,
    pub left: Tail,
    pub right: Tail,
}

impl LineFn {
    /// Window values with tails of the given shapes scaled to match the edges.
    pub fn with_shapes(grid: Grid1D, values: Vec<f64>, left: TailShape, right: TailShape) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} grid points",
                values.len(),
                grid.n()
            )));
        }
        let mut f = LineFn {
            grid,
            values,
            left: Tail {
                shape: left,
                scale: 0.0,
            },
            right: Tail {
                shape: right,
                scale: 0.0,
            },
        };
        f.refit_tails();
        Ok(f)
    }

    pub fn flat(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        Self::with_shapes(grid, values, TailShape::Flat, TailShape::Flat)
    }

    pub fn constant(grid: Grid1D, c: f64) -> Self {
        LineFn {
            grid,
            values: vec![c; grid.n()],
            left: Tail::flat(c),
            right: Tail::flat(c),
        }
    }

    /// Rescales both tails so that they agree with the window edge values.
    pub fn refit_tails(&mut self) {
        let (a, b) = (self.grid.x_min(), self.grid.x_max());
        let pl = self.left.shape.profile(a);
        let pr = self.right.shape.profile(b);
        self.left.scale = if pl > 0.0 { self.values[0] / pl } else { 0.0 };
        self.right.scale = if pr > 0.0 {
            self.values[self.values.len() - 1] / pr
        } else {
            0.0
        };
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x < self.grid.x_min() {
            self.left.value(x)
        } else if x > self.grid.x_max() {
            self.right.value(x)
        } else {
            let (i, a) = self.grid.locate(x);
            (1.0 - a) * self.values[i] + a * self.values[i + 1]
        }
    }

    pub fn tail(&self, side: Side) -> &Tail {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    /// Mass outside the window, `None` when a nonzero tail is not integrable.
    pub fn tail_mass(&self) -> Option<f64> {
        let mut total = 0.0;
        for (tail, side, edge) in [
            (&self.left, Side::Left, self.grid.x_min()),
            (&self.right, Side::Right, self.grid.x_max()),
        ] {
            if tail.scale == 0.0 {
                continue;
            }
            total += tail.scale * tail.shape.mass_beyond(edge, side)?;
        }
        Some(total)
    }

    pub fn to_gridfn(&self) -> GridFn {
        GridFn {
            grid: self.grid,
            values: self.values.clone(),
            tail_mass: self.tail_mass().unwrap_or(0.0).max(0.0),
        }
    }

    /// Pointwise map of the window values and tail scales by `c`.
    pub fn scale(&mut self, c: f64) {
        for v in &mut self.values {
            *v *= c;
        }
        self.left.scale *= c;
        self.right.scale *= c;
    }
}
