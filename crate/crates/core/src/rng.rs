//! Seeded random streams.
//!
//! Every replicate of an experiment draws from its own ChaCha8 stream:
//! the key is derived from the 64-bit experiment seed and the stream number
//! is the replicate index. Streams never overlap, so replicate results do not
//! depend on how replicates are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// The stream for replicate `replicate` of an experiment seeded with `seed`.
pub fn stream(seed: u64, replicate: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}
