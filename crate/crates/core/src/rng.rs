//! Seeded random streams.
//!
//! Every stochastic routine in the crate draws from [`SimRng`], a ChaCha8
//! generator. A run inside an ensemble gets its own stream: the key is the
//! base seed and the ChaCha stream id is the run index, so runs never share
//! keystream and the mapping is stable across thread counts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Generator for a single trajectory.
pub fn seeded(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Independent stream `run` derived from `base_seed`.
pub fn stream(base_seed: u64, run: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(base_seed);
    rng.set_stream(run);
    rng
}
