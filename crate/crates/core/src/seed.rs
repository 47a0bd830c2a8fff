//! Counter-based seed derivation.
//!
//! Every random stream in a campaign is keyed by `(seed, tag, index)` so that
//! streams never share state and adding a consumer does not shift the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random stream used throughout the crate.
pub type Rng = ChaCha8Rng;

/// Stream tags. Stable values: changing one changes every result on disk.
pub mod tag {
    pub const EVALUATION: u64 = 0x01;
    pub const ENV: u64 = 0x02;
    pub const AGENT: u64 = 0x03;
    pub const STRUCTURAL: u64 = 0x10;
    pub const REAL: u64 = 0x11;
    pub const RANDOM_SEARCH: u64 = 0x12;
    pub const MONOLITHIC: u64 = 0x13;
    pub const TWO_TIER: u64 = 0x20;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed, a stream tag and a counter.
pub fn derive(seed: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ tag) ^ index)
}

pub fn rng_from(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

pub fn stream(seed: u64, tag: u64, index: u64) -> Rng {
    rng_from(derive(seed, tag, index))
}
