//! Deterministic seed derivation so every RNG stream in the pipeline is a
//! pure function of one master seed plus a role/index path.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Role tags keep independent streams (dataset gen, splits, model init, ...)
/// from colliding even when their indices coincide.
#[derive(Debug, Clone, Copy)]
pub enum Role {
    DatasetGraph = 1,
    Split = 2,
    ModelInit = 3,
    Shuffle = 4,
    RandomMask = 5,
    Dataset = 6,
}

fn mix(mut z: u64) -> u64 {
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fold a path of words into `base`, one mix round per word.
pub fn derive(base: u64, path: &[u64]) -> u64 {
    let mut h = mix(base ^ 0x9E37_79B9_7F4A_7C15);
    for &w in path {
        h = mix(h ^ w.wrapping_add(0x9E37_79B9_7F4A_7C15));
    }
    h
}

pub fn rng(base: u64, role: Role, path: &[u64]) -> ChaCha8Rng {
    let mut words = Vec::with_capacity(path.len() + 1);
    words.push(role as u64);
    words.extend_from_slice(path);
    ChaCha8Rng::seed_from_u64(derive(base, &words))
}
