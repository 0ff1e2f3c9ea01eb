use rand::Rng;
use serde::{Deserialize, Serialize};

use super::conditioned::{walk_conditioned, JumpIntensity};
use super::histogram::Histogram;
use super::path::{check_span, walk_free};
use crate::error::{require_positive, Error, Result};
use crate::numerics::{map_chunks, CauchyMixture, RandomStream};

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl MeanEstimate {
    pub fn from_sums(sum: f64, sum_sq: f64, n: usize) -> Self {
        let nf = n as f64;
        let mean = sum / nf;
        let var = if n > 1 {
            ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0)
        } else {
            0.0
        };
        MeanEstimate {
            mean,
            stderr: (var / nf).sqrt(),
            n,
        }
    }
}

fn check_paths(n_paths: usize) -> Result<()> {
    if n_paths == 0 {
        return Err(Error::param("n_paths", "need at least one path"));
    }
    Ok(())
}

/// Number of jumps of free paths on `[0, t]`.
pub fn jump_count_estimate(epsilon: f64, t: f64, n_paths: usize, stream: RandomStream) -> Result<MeanEstimate> {
    require_positive("epsilon", epsilon)?;
    require_positive("t", t)?;
    check_paths(n_paths)?;
    let parts = map_chunks(n_paths, |range| {
        let (mut s, mut s2) = (0.0, 0.0);
        for i in range {
            let mut count = 0.0;
            walk_free(epsilon, 0.0, (0.0, t), &mut stream.path(i as u64).rng(), |_, _| {
                count += 1.0
            });
            s += count;
            s2 += count * count;
        }
        (s, s2)
    });
    let (s, s2) = parts.into_iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(MeanEstimate::from_sums(s, s2, n_paths))
}

/// Terminal displacements `Y^ε_t − x0` of free paths, in path order.
pub fn free_terminal_displacements(epsilon: f64, t: f64, n_paths: usize, stream: RandomStream) -> Result<Vec<f64>> {
    require_positive("epsilon", epsilon)?;
    require_positive("t", t)?;
    check_paths(n_paths)?;
    let parts = map_chunks(n_paths, |range| {
        range
            .map(|i| walk_free(epsilon, 0.0, (0.0, t), &mut stream.path(i as u64).rng(), |_, _| {}))
            .collect::<Vec<_>>()
    });
    Ok(parts.concat())
}

/// Histogram of `X^ε_t` for conditioned paths started from `start` at time 0.
pub fn conditioned_occupation(
    intensity: &JumpIntensity,
    start: &CauchyMixture,
    t: f64,
    template: &Histogram,
    n_paths: usize,
    stream: RandomStream,
) -> Result<Histogram> {
    check_paths(n_paths)?;
    check_span((0.0, t))?;
    let parts = map_chunks(n_paths, |range| -> Result<Histogram> {
        let mut h = template.clone();
        h.counts.iter_mut().for_each(|c| *c = 0);
        h.below = 0;
        h.above = 0;
        for i in range {
            let mut rng = stream.path(i as u64).rng();
            let x0 = start.sample(&mut rng);
            h.add(walk_conditioned(intensity, x0, (0.0, t), &mut rng, |_, _| {})?);
        }
        Ok(h)
    });
    let mut out = template.clone();
    out.counts.iter_mut().for_each(|c| *c = 0);
    out.below = 0;
    out.above = 0;
    for p in parts {
        out.merge(&p?);
    }
    Ok(out)
}

/// Conditioned paths from `x0`: the states at each of `times` (increasing, in
/// `(t0, T]`), one row per path.
pub fn conditioned_snapshots(
    intensity: &JumpIntensity,
    x0: f64,
    t0: f64,
    times: &[f64],
    n_paths: usize,
    stream: RandomStream,
) -> Result<Vec<Vec<f64>>> {
    check_paths(n_paths)?;
    let t_end = *times.last().ok_or_else(|| Error::param("times", "empty"))?;
    check_span((t0, t_end))?;
    let parts = map_chunks(n_paths, |range| -> Result<Vec<Vec<f64>>> {
        range
            .map(|i| {
                let mut rng = stream.path(i as u64).rng();
                sample_states(intensity, x0, t0, times, &mut rng)
            })
            .collect()
    });
    let mut out = Vec::with_capacity(n_paths);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

fn sample_states<R: Rng + ?Sized>(
    intensity: &JumpIntensity,
    x0: f64,
    t0: f64,
    times: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mut jumps = Vec::new();
    walk_conditioned(intensity, x0, (t0, times[times.len() - 1]), rng, |t, x| {
        jumps.push((t, x))
    })?;
    Ok(times
        .iter()
        .map(|&s| {
            let k = jumps.partition_point(|&(t, _)| t <= s);
            if k == 0 {
                x0
            } else {
                jumps[k - 1].1
            }
        })
        .collect())
}
