//! Seeded, counter-based random number streams. Every parallel unit of
//! work (simulation draw, Monte Carlo replication) gets its own stream
//! keyed by (seed, index), so results never depend on thread scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The concrete generator behind [`stream_rng`], exported so callers
/// can name it without depending on the ChaCha crate themselves.
pub type StreamRng = ChaCha8Rng;

/// A ChaCha stream for work unit `index` under `seed`. Streams with the
/// same seed and different indices are statistically independent.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Derives an independent child seed from (seed, index) via a SplitMix64
/// step, for sub-tasks that need their own family of streams.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x1234_5678_9ABC_DEF1);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
