//! Seed plumbing. Every random stream in the crate is a ChaCha8 generator
//! seeded from a master seed plus a stream index, so results do not depend
//! on thread scheduling or platform word size.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent child seed for stream `index` of `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix(mix(master) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
