//! Seed plumbing. Every random stream in the crate is a ChaCha8 generator
//! keyed by a 64-bit seed, and sub-streams are derived by mixing a tag into
//! the parent seed so that independent stages never share state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent child seed from `seed` and a stream tag.
pub fn derive(seed: u64, tag: u64) -> u64 {
    mix64(seed ^ mix64(tag.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

pub fn rng_from(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rng_for(seed: u64, tag: u64) -> Rng {
    rng_from(derive(seed, tag))
}

// Stream tags. Values are arbitrary but frozen: changing them changes every
// reproducible result.
pub(crate) const TAG_SP_INIT: u64 = 0x5350_494e_4954;
pub(crate) const TAG_SP_SWEEP: u64 = 0x5350_5357_4550;
pub(crate) const TAG_SID_ROUND: u64 = 0x5349_4452_4e44;
pub(crate) const TAG_SID_WALK: u64 = 0x5349_4457_4c4b;
pub(crate) const TAG_MLP_INIT: u64 = 0x4d4c_5049_4e49;
pub(crate) const TAG_MLP_SHUFFLE: u64 = 0x4d4c_5053_4846;
