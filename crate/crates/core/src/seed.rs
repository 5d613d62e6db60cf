//! Seed expansion. Every random stream in the crate is a ChaCha8 stream keyed
//! by one user seed, so a single `--seed` reproduces a whole run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for stream `stream` of `seed`. Distinct streams are independent.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Child seed for sub-task `index`, e.g. one trial of a sweep.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    use rand::RngCore;
    stream_rng(seed, index.wrapping_add(1 << 32)).next_u64()
}
