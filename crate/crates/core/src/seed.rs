//! Deterministic seed derivation.
//!
//! Every random draw in the crate goes through a [`ChaCha8Rng`] seeded from a
//! `u64`. Sub-seeds for independent streams (one per trial, per fold, per
//! purpose) are derived by mixing the parent seed with stream indices, so a
//! single base seed reproduces an entire experiment.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `parent` and an ordered list of stream indices.
pub fn derive(parent: u64, streams: &[u64]) -> u64 {
    streams.iter().fold(mix64(parent), |acc, &s| {
        mix64(acc ^ mix64(s.wrapping_add(0xA076_1D64_78BD_642F)))
    })
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
