use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::GridFn;

/// Equal-width bins on `[lo, hi]` plus one unbounded bin on each side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    pub below: u64,
    pub above: u64,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) || bins == 0 {
            return Err(Error::param(
                "histogram",
                format!("need lo < hi and bins ≥ 1, got [{lo}, {hi}], {bins}"),
            ));
        }
        Ok(Histogram {
            lo,
            hi,
            counts: vec![0; bins],
            below: 0,
            above: 0,
        })
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins() as f64
    }

    pub fn edges(&self) -> Vec<f64> {
        (0..=self.bins()).map(|k| self.lo + k as f64 * self.width()).collect()
    }

    pub fn add(&mut self, x: f64) {
        if x < self.lo {
            self.below += 1;
        } else if x >= self.hi {
            self.above += 1;
        } else {
            let k = (((x - self.lo) / self.width()) as usize).min(self.bins() - 1);
            self.counts[k] += 1;
        }
    }

    pub fn merge(&mut self, other: &Histogram) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.below += other.below;
        self.above += other.above;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.below + self.above
    }

    /// Bin frequencies `[below, bins…, above]`.
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.total().max(1) as f64;
        std::iter::once(self.below)
            .chain(self.counts.iter().copied())
            .chain(std::iter::once(self.above))
            .map(|c| c as f64 / n)
            .collect()
    }

    /// Σ|frequency − expected| over all bins including the two tail bins;
    /// `expected` is laid out like [`Histogram::frequencies`].
    pub fn l1_distance(&self, expected: &[f64]) -> Result<f64> {
        if expected.len() != self.bins() + 2 {
            return Err(Error::param(
                "expected",
                format!("{} masses for {} bins", expected.len(), self.bins() + 2),
            ));
        }
        Ok(self
            .frequencies()
            .iter()
            .zip(expected)
            .map(|(a, b)| (a - b).abs())
            .sum())
    }

    /// Expected masses from a CDF.
    pub fn masses_from_cdf(&self, cdf: impl Fn(f64) -> f64) -> Vec<f64> {
        let edges = self.edges();
        let mut m = vec![cdf(self.lo)];
        m.extend(edges.windows(2).map(|w| cdf(w[1]) - cdf(w[0])));
        m.push(1.0 - cdf(self.hi));
        m
    }

    /// Expected masses of a grid density. The out-of-window tail mass is
    /// split between the sides as for `c/(x − m)²` tails matching the edge
    /// values, with `m` the window median.
    pub fn masses_from_density(&self, rho: &GridFn) -> Vec<f64> {
        let g = rho.grid;
        let mut cum = vec![0.0; g.n()];
        for i in 1..g.n() {
            cum[i] = cum[i - 1] + 0.5 * g.dx() * (rho.values[i - 1] + rho.values[i]);
        }
        let half = 0.5 * cum[g.n() - 1];
        let k = cum.partition_point(|&c| c < half).min(g.n() - 1);
        let m = g.point(k);
        let (l, r) = (rho.values[0] * (m - g.x_min()), rho.values[g.n() - 1] * (g.x_max() - m));
        let left_tail = if l + r > 0.0 {
            rho.tail_mass * l / (l + r)
        } else {
            0.5 * rho.tail_mass
        };
        let cdf = |x: f64| {
            if x <= g.x_min() {
                return left_tail;
            }
            if x >= g.x_max() {
                return left_tail + cum[g.n() - 1];
            }
            let (i, a) = g.locate(x);
            // exact for the piecewise-linear interpolant
            let h = a * g.dx();
            let v0 = rho.values[i];
            let v1 = rho.values[i + 1];
            left_tail + cum[i] + h * (v0 + 0.5 * a * (v1 - v0))
        };
        let total = left_tail + cum[g.n() - 1] + (rho.tail_mass - left_tail);
        let mut m = self.masses_from_cdf(cdf);
        let last = m.len() - 1;
        m[last] = total - cdf(self.hi);
        m
    }

    /// CSV `bin_lo,bin_hi,empirical,expected`; tail bins use ±inf edges.
    pub fn to_csv(&self, expected: &[f64]) -> String {
        let edges = self.edges();
        let freq = self.frequencies();
        let mut s = String::from("bin_lo,bin_hi,empirical,expected\n");
        for k in 0..freq.len() {
            let lo = if k == 0 { f64::NEG_INFINITY } else { edges[k - 1] };
            let hi = if k == freq.len() - 1 { f64::INFINITY } else { edges[k] };
            let e = expected.get(k).copied().unwrap_or(f64::NAN);
            let _ = writeln!(s, "{lo},{hi},{},{e}", freq[k]);
        }
        s
    }
}
