//! Seeded, splittable random streams.
//!
//! Every stochastic operation takes a `u64` seed. Parallel work derives one
//! child seed per task index so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type XiRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> XiRng {
    ChaCha8Rng::seed_from_u64(seed)
}

// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for task `index` of a computation seeded with `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix64(mix64(seed ^ 0x9e37_79b9_7f4a_7c15).wrapping_add(mix64(index.wrapping_add(1))))
}

/// Child seed for a named sub-stream (`"ties"`, `"mu"`, ...).
pub fn derive_named(seed: u64, label: &str) -> u64 {
    let tag = label
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3));
    derive_seed(seed, tag)
}
