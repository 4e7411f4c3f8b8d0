//! Replicate scheduling.
//!
//! Replicates run on the current rayon pool. Each replicate owns its stream
//! (see [`crate::rng`]) and results are collected in replicate order, so
//! output does not depend on the number of worker threads.

use rayon::prelude::*;

use crate::error::Result;
use crate::rng::replicate_seed;

/// Runs `f(replicate, seed)` for `replicate in 0..reps`.
pub fn replicates<T, F>(base_seed: u64, reps: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, u64) -> Result<T> + Sync + Send,
{
    (0..reps)
        .into_par_iter()
        .map(|r| f(r, replicate_seed(base_seed, r as u64)))
        .collect()
}
