//! Seeded random streams.
//!
//! All randomness in an experiment flows from one 64-bit seed. Independent
//! workers draw from disjoint ChaCha streams of that seed, so results do not
//! depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// The generator for stream `stream` of `seed`.
pub fn stream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream ids used by the experiment harness. Each family member or target
/// gets its own block so that adding repetitions never shifts earlier ones.
pub fn block_stream(block: u64, rep: u64) -> u64 {
    (block << 40) | rep
}
