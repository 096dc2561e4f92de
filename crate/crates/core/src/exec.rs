//! Execution strategy for independent trials, plus per-trial seed derivation.
//!
//! Every trial gets its own RNG seeded from [`mix_seed`], so results depend
//! only on the base seed and the trial coordinates, never on scheduling.
//! Outputs are collected in trial order and reduced sequentially.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Rayon pool with the given worker count (`None`: available parallelism).
    /// Without the `parallel` feature this runs sequentially.
    #[default]
    Parallel,
    ParallelWith(usize),
}

impl Execution {
    pub fn from_workers(workers: Option<usize>) -> Self {
        match workers {
            Some(1) => Execution::Sequential,
            Some(n) => Execution::ParallelWith(n),
            None => Execution::Parallel,
        }
    }

    /// Maps `f` over `0..count`, returning results in index order.
    pub fn map_indexed<T, F>(self, count: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..count).map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => (0..count).into_par_iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::ParallelWith(workers) => {
                if workers == 0 {
                    return Err(Error::InvalidArgument("worker count must be positive".into()));
                }
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
                pool.install(|| (0..count).into_par_iter().map(f).collect())
            }
            #[cfg(not(feature = "parallel"))]
            Execution::Parallel => (0..count).map(f).collect(),
            #[cfg(not(feature = "parallel"))]
            Execution::ParallelWith(workers) => {
                if workers == 0 {
                    return Err(Error::InvalidArgument("worker count must be positive".into()));
                }
                (0..count).map(f).collect()
            }
        }
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `parts` into `base`: `h ← splitmix64(h ^ part)` for each part in order.
pub fn mix_seed(base: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(base), |h, &p| splitmix64(h ^ p))
}
