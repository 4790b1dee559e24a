//! Seed derivation.
//!
//! Every stochastic step draws from a `ChaCha8Rng` whose 64-bit seed is
//! derived from `(base seed, trial, round, purpose tag)`. The tag is hashed
//! with FNV-1a and the four words are folded through the SplitMix64
//! finalizer, so streams for different purposes never share state and the
//! result does not depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(tag: &str) -> u64 {
    tag.bytes()
        .fold(FNV_OFFSET, |h, b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a base seed, trial, round and purpose tag.
pub fn derive_seed(base: u64, trial: u64, round: u64, tag: &str) -> u64 {
    [trial, round, fnv1a(tag)]
        .into_iter()
        .fold(splitmix(base), |acc, word| splitmix(splitmix(acc) ^ word))
}

/// Child seed for the `index`-th item of a family (ensemble member, pseudo-label set).
pub fn child_seed(parent: u64, index: u64) -> u64 {
    derive_seed(parent, index, 0, "child")
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
