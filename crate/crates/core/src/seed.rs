//! Seeded randomness.
//!
//! A run has one root seed. Every stochastic sub-task derives its own stream
//! from the root and a stable label, so results never depend on how tasks are
//! scheduled across threads.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RngSeed(pub u64);

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit hash of a byte string (FNV-1a folded through splitmix64).
pub fn stable_hash(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    splitmix64(h)
}

/// Stable hash of a sequence of words; order matters.
pub fn hash_words(words: impl IntoIterator<Item = u64>) -> u64 {
    let mut h: u64 = 0x6A09_E667_F3BC_C908;
    for w in words {
        h = splitmix64(h ^ splitmix64(w));
    }
    h
}

impl RngSeed {
    pub fn derive(self, label: &str) -> RngSeed {
        RngSeed(hash_words([self.0, stable_hash(label.as_bytes())]))
    }

    pub fn derive_index(self, label: &str, index: u64) -> RngSeed {
        RngSeed(hash_words([self.0, stable_hash(label.as_bytes()), index]))
    }

    pub fn derive_words(self, label: &str, words: &[u64]) -> RngSeed {
        RngSeed(hash_words(
            [self.0, stable_hash(label.as_bytes())]
                .into_iter()
                .chain(words.iter().copied()),
        ))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

/// A uniformly random permutation of `y`, deterministic in `seed`.
pub fn permute_response<T: Copy>(y: &[T], seed: RngSeed) -> Result<Vec<T>> {
    contract!(y.len() >= 2, "permute_response needs at least 2 values, got {}", y.len());
    let mut out = y.to_vec();
    out.shuffle(&mut seed.rng());
    Ok(out)
}
