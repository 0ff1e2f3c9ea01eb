use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::path::walk_free;
use crate::error::{require_positive, Error, Result};
use crate::numerics::{map_chunks, RandomStream};

/// `3(1 − (2/π)arctan(n/(3t)))`, the bound on `P(sup_{s≤t}|X_s| > n)` for the
/// Cauchy process started at the origin.
pub fn maximal_bound(n: f64, t: f64) -> f64 {
    3.0 * (1.0 - 2.0 / PI * (n / (3.0 * t)).atan())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaximalRow {
    pub n: f64,
    pub empirical: f64,
    pub stderr: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximalReport {
    pub epsilon: f64,
    pub t: f64,
    pub n_paths: usize,
    pub rows: Vec<MaximalRow>,
}

impl MaximalReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,empirical,stderr,bound,pass\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{:e},{},{}", r.n, r.empirical, r.stderr, r.bound, r.pass);
        }
        s
    }
}

/// Empirical `P(sup_{s≤t}|Y^ε_s| > n)` over free step paths from the origin,
/// compared with [`maximal_bound`] plus three standard errors.
pub fn maximal_inequality_check(
    n_values: &[f64],
    t: f64,
    epsilon: f64,
    n_paths: usize,
    stream: RandomStream,
) -> Result<MaximalReport> {
    require_positive("t", t)?;
    require_positive("epsilon", epsilon)?;
    if n_paths == 0 {
        return Err(Error::param("n_paths", "need at least one path"));
    }
    for &n in n_values {
        require_positive("n", n)?;
    }
    let chunks = map_chunks(n_paths, |range| {
        let mut hits = vec![0u64; n_values.len()];
        for i in range {
            let mut rng = stream.path(i as u64).rng();
            let mut sup: f64 = 0.0;
            walk_free(epsilon, 0.0, (0.0, t), &mut rng, |_, x| sup = sup.max(x.abs()));
            for (h, &n) in hits.iter_mut().zip(n_values) {
                if sup > n {
                    *h += 1;
                }
            }
        }
        hits
    });
    let mut hits = vec![0u64; n_values.len()];
    for c in chunks {
        for (h, v) in hits.iter_mut().zip(c) {
            *h += v;
        }
    }
    let rows = n_values
        .iter()
        .zip(hits)
        .map(|(&n, h)| {
            let p = h as f64 / n_paths as f64;
            let stderr = (p * (1.0 - p) / n_paths as f64).sqrt();
            let bound = maximal_bound(n, t);
            MaximalRow {
                n,
                empirical: p,
                stderr,
                bound,
                pass: p <= bound + 3.0 * stderr,
            }
        })
        .collect();
    Ok(MaximalReport {
        epsilon,
        t,
        n_paths,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_values() {
        assert!((maximal_bound(3.0, 1.0) - 1.5).abs() < 1e-14);
        assert!((maximal_bound(30.0, 1.0) - 0.190_3).abs() < 1e-4);
        assert!(maximal_bound(1e9, 1.0) < 1e-8);
    }

    #[test]
    fn small_run_passes() {
        let r = maximal_inequality_check(&[3.0, 30.0], 1.0, 0.01, 4000, RandomStream::new(5, 0)).unwrap();
        assert!(r.all_pass());
        assert!(r.rows[0].empirical > r.rows[1].empirical);
        assert!(maximal_inequality_check(&[0.0], 1.0, 0.01, 10, RandomStream::new(5, 0)).is_err());
    }
}
