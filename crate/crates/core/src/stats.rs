//! Seeded random streams and running-moment accumulators.
//!
//! Every Monte Carlo experiment derives its generators from a 64-bit seed
//! and a stream id; shard `i` always uses stream `i`, so results do not
//! depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Welford running mean and variance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Welford {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Chan et al. pairwise combination; callers merge in a fixed order.
    pub fn merge(&mut self, other: &Welford) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let d = other.mean - self.mean;
        self.mean += d * other.count as f64 / n;
        self.m2 += other.m2 + d * d * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            f64::INFINITY
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// A Monte Carlo estimate at flow time `t`; `stderr` is the sample standard
/// deviation over `√samples`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AverageEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
    pub t: f64,
    pub seed: u64,
}

impl AverageEstimate {
    pub fn from_welford(w: &Welford, t: f64, seed: u64) -> Self {
        Self { mean: w.mean, stderr: w.stderr(), samples: w.count, t, seed }
    }
}

/// Split `total` into `shards` near-equal parts (earlier shards get the remainder).
pub fn shard_sizes(total: u64, shards: usize) -> Vec<u64> {
    let shards = shards.max(1) as u64;
    (0..shards).map(|i| total / shards + u64::from(i < total % shards)).collect()
}
