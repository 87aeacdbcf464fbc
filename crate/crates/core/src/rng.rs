//! Seeded random streams and the replica thread pool.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

pub type SimRng = ChaCha8Rng;

/// Generator for `(seed, stream)`; identical pairs give identical sequences.
pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Worker count from `SPINLAB_THREADS`, defaulting to the available cores.
pub fn configured_threads() -> usize {
    std::env::var("SPINLAB_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Runs `f(i)` for every replica index on a pool of `threads` workers.
/// Results come back in index order, so output never depends on scheduling.
pub fn map_replicas<T, F>(replicas: usize, threads: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    Ok(pool.install(|| (0..replicas).into_par_iter().map(&f).collect()))
}
