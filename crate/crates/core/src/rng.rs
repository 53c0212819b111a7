//! Seeded random streams.
//!
//! All randomness goes through ChaCha8 keyed by a 64-bit seed. Independent
//! pieces of a computation draw from distinct ChaCha stream ids of the same
//! key, so adding draws to one piece never shifts another. Gaussian variates
//! come from the ziggurat sampler of `rand_distr::StandardNormal`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const GENERATOR: &str = "ChaCha8 (rand_chacha), one stream id per block";
pub const GAUSSIAN_SAMPLER: &str = "ziggurat (rand_distr::StandardNormal)";

/// Generator for stream `stream` of key `seed`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derive a child seed (splitmix64 finalizer) for replicate or cell `index`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
