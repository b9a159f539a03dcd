//! Counter-based seed derivation.
//!
//! Every random stream is a pure function of a master seed and a small
//! integer key, so results never depend on scheduling or worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator type used throughout the crate.
pub type GseRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for `key` under `master`.
pub fn derive_seed(master: u64, key: u64) -> u64 {
    splitmix64(splitmix64(master) ^ splitmix64(key.wrapping_add(0x632B_E59B_D9B4_E019)))
}

/// Generator for a single call seeded with `seed`.
pub fn rng_from_seed(seed: u64) -> GseRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for replicate `index` of the experiment seeded with `seed`.
/// Replicates share the key and differ in the ChaCha stream id.
pub fn replicate_rng(seed: u64, index: u64) -> GseRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
