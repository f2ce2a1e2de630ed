//! Deterministic fan-out of independent trials.
//!
//! Results come back in trial-id order whatever the worker count, and every
//! reduction downstream is a sequential fold over that order, so floating
//! point sums are bit-identical between 1 and N workers.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Worker-pool size; `0` means "all available cores".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Workers(pub usize);

impl Workers {
    pub const SINGLE: Workers = Workers(1);
}

/// Trial budget and seeding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Run {
    pub master: u64,
    pub trials: u64,
    pub workers: Workers,
}

/// Maps `f` over trial ids `0..n` with per-worker scratch state from `init`.
pub fn map_trials<S, T, I, F>(n: u64, workers: Workers, init: I, f: F) -> Result<Vec<T>>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, u64) -> T + Sync + Send,
{
    if workers.0 == 1 {
        let mut scratch = init();
        return Ok((0..n).map(|t| f(&mut scratch, t)).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.0)
        .build()
        .map_err(|e| Error::Unsupported(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        (0..n)
            .into_par_iter()
            .map_init(&init, |s, t| f(s, t))
            .collect()
    }))
}

/// Like [`map_trials`] for fallible trials; the first error in trial order wins.
pub fn try_map_trials<S, T, I, F>(n: u64, workers: Workers, init: I, f: F) -> Result<Vec<T>>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, u64) -> Result<T> + Sync + Send,
{
    map_trials(n, workers, init, f)?.into_iter().collect()
}
