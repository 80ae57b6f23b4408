//! Seed derivation for independent work units.
//!
//! Trials use `base_seed + trial_index`. Everything below a trial (folds,
//! noise streams, model initialisation) gets a seed mixed from its parent and
//! a small tag through SplitMix64, so units never share a stream and the
//! mapping is stable across platforms.

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `parent` with each tag in turn.
pub fn derive(parent: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(splitmix64(parent), |acc, &tag| splitmix64(acc ^ splitmix64(tag)))
}

pub fn trial_seed(base_seed: u64, trial: usize) -> u64 {
    base_seed.wrapping_add(trial as u64)
}

/// Stream tags used by the evaluation harness.
pub mod stream {
    pub const NOISE_POOL: u64 = 1;
    pub const NOISE_TEST: u64 = 2;
    pub const MODEL: u64 = 3;
    pub const TREE: u64 = 4;
}
