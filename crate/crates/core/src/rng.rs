//! Seeded random streams.
//!
//! One seed per experiment; each sampled object draws from its own ChaCha
//! stream selected by a counter, so results do not depend on evaluation
//! order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for stream `stream` of experiment seed `seed`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream ids are namespaced so different samplers never share one.
pub fn stream_id(namespace: u32, index: u64) -> u64 {
    ((namespace as u64) << 40) ^ index
}
