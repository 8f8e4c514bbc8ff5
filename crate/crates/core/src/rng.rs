//! Seeded random streams.
//!
//! Every stochastic routine takes a `(seed, stream)` pair and builds its own
//! ChaCha8 generator, so parallel work is reproducible independent of
//! thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
