use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A bounded nonnegative potential `V`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    /// `V ≡ c`.
    Constant { c: f64 },
    /// `V = h·χ_[a,b]`.
    Box { a: f64, b: f64, height: f64 },
    /// `V = min(x², cap)`.
    TruncatedHarmonic { cap: f64 },
    /// Piecewise-linear through `(x[i], v[i])`, constant beyond the end points.
    Tabulated { x: Vec<f64>, v: Vec<f64> },
}

impl Potential {
    pub fn zero() -> Self {
        Potential::Constant { c: 0.0 }
    }

    /// Checks nonnegativity and shape constraints.
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::param("potential", reason));
        match self {
            Potential::Constant { c } => {
                if !(c.is_finite() && *c >= 0.0) {
                    return bad(format!("constant must be finite and ≥ 0, got {c}"));
                }
            }
            Potential::Box { a, b, height } => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return bad(format!("box needs a < b, got [{a}, {b}]"));
                }
                if !(height.is_finite() && *height >= 0.0) {
                    return bad(format!("box height must be finite and ≥ 0, got {height}"));
                }
            }
            Potential::TruncatedHarmonic { cap } => {
                if !(cap.is_finite() && *cap >= 0.0) {
                    return bad(format!("harmonic cap must be finite and ≥ 0, got {cap}"));
                }
            }
            Potential::Tabulated { x, v } => {
                if x.is_empty() || x.len() != v.len() {
                    return bad("tabulated potential needs equally many (≥ 1) x and v values".into());
                }
                if x.windows(2).any(|w| !(w[0] < w[1])) {
                    return bad("tabulated x values must be strictly increasing".into());
                }
                if v.iter().any(|&y| !(y.is_finite() && y >= 0.0)) {
                    return bad("tabulated values must be finite and ≥ 0".into());
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Potential::Constant { c } => *c,
            Potential::Box { a, b, height } => {
                if (*a..=*b).contains(&x) {
                    *height
                } else {
                    0.0
                }
            }
            Potential::TruncatedHarmonic { cap } => (x * x).min(*cap),
            Potential::Tabulated { x: xs, v } => {
                let k = xs.partition_point(|&p| p <= x);
                if k == 0 {
                    v[0]
                } else if k == xs.len() {
                    v[v.len() - 1]
                } else {
                    let a = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
                    (1.0 - a) * v[k - 1] + a * v[k]
                }
            }
        }
    }

    /// Global bound `M` with `0 ≤ V ≤ M`.
    pub fn global_bound(&self) -> Option<f64> {
        Some(match self {
            Potential::Constant { c } => *c,
            Potential::Box { height, .. } => *height,
            Potential::TruncatedHarmonic { cap } => *cap,
            Potential::Tabulated { v, .. } => v.iter().copied().fold(0.0, f64::max),
        })
    }

    /// `c_n = sup_{|x| ≤ n} V(x)`.
    pub fn compact_bound(&self, n: f64) -> f64 {
        match self {
            Potential::Constant { c } => *c,
            Potential::Box { a, b, height } => {
                if *b < -n || *a > n {
                    0.0
                } else {
                    *height
                }
            }
            Potential::TruncatedHarmonic { cap } => (n * n).min(*cap),
            Potential::Tabulated { x, v } => {
                let mut m = self.eval(-n).max(self.eval(n));
                for (xi, vi) in x.iter().zip(v) {
                    if xi.abs() <= n {
                        m = m.max(*vi);
                    }
                }
                m
            }
        }
    }

    /// Supremum of `V` over `[lo, hi]`.
    pub fn sup_on(&self, lo: f64, hi: f64) -> f64 {
        match self {
            Potential::Constant { c } => *c,
            Potential::Box { a, b, height } => {
                if *b < lo || *a > hi {
                    0.0
                } else {
                    *height
                }
            }
            Potential::TruncatedHarmonic { cap } => {
                let r = lo.abs().max(hi.abs());
                (r * r).min(*cap)
            }
            Potential::Tabulated { x, v } => {
                let mut m = self.eval(lo).max(self.eval(hi));
                for (xi, vi) in x.iter().zip(v) {
                    if (lo..=hi).contains(xi) {
                        m = m.max(*vi);
                    }
                }
                m
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.global_bound() == Some(0.0)
    }
}

impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::Constant { c } => write!(f, "const:{c}"),
            Potential::Box { a, b, height } => write!(f, "box:{a},{b},{height}"),
            Potential::TruncatedHarmonic { cap } => write!(f, "harmonic:{cap}"),
            Potential::Tabulated { x, v } => {
                let pts: Vec<String> = x.iter().zip(v).map(|(a, b)| format!("{a}/{b}")).collect();
                write!(f, "table:{}", pts.join(","))
            }
        }
    }
}

/// Parses `const:c`, `box:a,b,h`, `harmonic:cap` and `table:x/v,x/v,…`.
impl FromStr for Potential {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        let nums = |args: &str| -> Result<Vec<f64>> {
            args.split(',')
                .filter(|a| !a.trim().is_empty())
                .map(|a| {
                    a.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::param("potential", format!("bad number {a:?}: {e}")))
                })
                .collect()
        };
        let p = match name.trim() {
            "const" | "constant" => match nums(args)?.as_slice() {
                [c] => Potential::Constant { c: *c },
                _ => return Err(Error::param("potential", "const takes one value: const:c")),
            },
            "box" => match nums(args)?.as_slice() {
                [a, b, h] => Potential::Box {
                    a: *a,
                    b: *b,
                    height: *h,
                },
                _ => return Err(Error::param("potential", "box takes three values: box:a,b,h")),
            },
            "harmonic" => match nums(args)?.as_slice() {
                [cap] => Potential::TruncatedHarmonic { cap: *cap },
                _ => return Err(Error::param("potential", "harmonic takes one value: harmonic:cap")),
            },
            "table" => {
                let mut x = Vec::new();
                let mut v = Vec::new();
                for pair in args.split(',') {
                    let (a, b) = pair
                        .split_once('/')
                        .ok_or_else(|| Error::param("potential", format!("bad table entry {pair:?}")))?;
                    x.push(nums(a)?.first().copied().unwrap_or(f64::NAN));
                    v.push(nums(b)?.first().copied().unwrap_or(f64::NAN));
                }
                Potential::Tabulated { x, v }
            }
            other => return Err(Error::param("potential", format!("unknown preset {other:?}"))),
        };
        p.validate()?;
        Ok(p)
    }
}
