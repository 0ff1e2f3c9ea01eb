use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// A reproducible random stream: `(seed, stream_id)` fully determines the
/// draw sequence, independent of how work is spread over threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomStream {
    pub seed: u64,
    pub stream_id: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Child stream for path `index` of an experiment run on this stream.
    pub fn path(&self, index: u64) -> RandomStream {
        RandomStream {
            seed: splitmix64(self.seed ^ splitmix64(self.stream_id)),
            stream_id: index,
        }
    }

    /// An independent sibling stream (for a second estimator in the same run).
    pub fn fork(&self, label: u64) -> RandomStream {
        RandomStream {
            seed: splitmix64(self.seed.wrapping_add(splitmix64(label ^ 0xA5A5_5A5A))),
            stream_id: self.stream_id,
        }
    }
}

/// Paths per work unit in Monte-Carlo loops; chunk results are merged in index
/// order so sums are bit-identical for any thread count.
pub const MC_CHUNK: usize = 2048;

/// Runs `work` over `0..n` in fixed-size chunks (in parallel) and returns the
/// per-chunk results in chunk order.
pub fn map_chunks<T, F>(n: usize, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(std::ops::Range<usize>) -> T + Sync + Send,
{
    let chunks = n.div_ceil(MC_CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| work(c * MC_CHUNK..((c + 1) * MC_CHUNK).min(n)))
        .collect()
}
