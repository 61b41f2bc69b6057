//! Seeded random streams.
//!
//! Every stochastic routine takes its generator explicitly. Replicated work
//! derives one independent ChaCha stream per replicate from `(seed, index)`,
//! so results do not depend on how replicates are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used throughout the crate.
pub type SimRng = ChaCha8Rng;

/// Generator seeded from a single 64-bit value.
pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `index` for a given base seed.
pub fn stream(seed: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
