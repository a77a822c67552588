//! Deterministic RNG construction.
//!
//! All randomized paths take an explicit seed and derive per-task generators
//! from it, so a given (seed, task index) pair produces the same draws
//! regardless of thread scheduling or how many other tasks ran first.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Root generator for a seed.
pub fn root_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent generator for one task under a seed.
///
/// Uses the cipher's stream parameter, so distinct `stream` values yield
/// statistically independent sequences without hashing tricks.
pub fn substream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream id for a cell in a two-level grid (e.g. sweep cell x scene).
pub fn grid_stream(outer: u32, inner: u32) -> u64 {
    (u64::from(outer) << 32) | u64::from(inner)
}
