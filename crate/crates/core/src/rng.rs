//! Seeding. Every random stream is a ChaCha8 generator keyed by a 64-bit
//! seed; substreams for (experiment, replicate) pairs are derived by hashing,
//! so a replicate's data do not depend on which thread ran it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for replicate `replicate` of experiment cell `experiment`.
pub fn substream(seed: u64, experiment: u64, replicate: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ experiment) ^ replicate.rotate_left(17))
}

/// Seed for the `k`-th independent purpose (design, response, ...) under `seed`.
pub fn derive(seed: u64, k: u64) -> u64 {
    substream(seed, u64::MAX - k, 0)
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
