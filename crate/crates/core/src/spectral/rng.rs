//! Seeding and stream splitting.
//!
//! Every replication draws from its own `ChaCha8Rng` whose seed is a
//! SplitMix64 hash of `(master_seed, index)`, so results do not depend on
//! how replications are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used for every random draw in the crate.
pub type SpectralRng = ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for replication `index` of a run started from `master_seed`.
pub fn replication_seed(master_seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master_seed) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

pub fn rng_from_seed(seed: u64) -> SpectralRng {
    ChaCha8Rng::seed_from_u64(seed)
}
