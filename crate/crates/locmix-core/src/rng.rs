//! Seed plumbing: every sampling entry point derives an independent ChaCha
//! stream from a user seed so that batch work can be split across tasks
//! without sharing generator state.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; spreads low-entropy seeds over the full state space.
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix(seed))
}

/// Deterministic per-index sub-seed, used for independent grid points.
pub fn derived_seed(seed: u64, index: u64) -> u64 {
    splitmix(seed ^ splitmix(index))
}
