//! Seeded random streams.
//!
//! Every pipeline phase draws from its own ChaCha stream of the run seed, so
//! changing how much one phase consumes never perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream identifiers for the pipeline phases.
pub mod phase {
    pub const REF_LABELED: u64 = 1;
    pub const REF_UNLABELED: u64 = 2;
    pub const VER_TRAIN: u64 = 3;
    pub const VER_TEST: u64 = 4;
    pub const TRAIN: u64 = 5;
    pub const TEST: u64 = 6;
    pub const HELD_OUT: u64 = 7;
    pub const HOLDOUT_EVAL: u64 = 8;
    pub const HOLDOUT_TRAIN: u64 = 9;
    /// First of the null-calibration streams; replicate `j` uses `NULL_BASE + j`.
    pub const NULL_BASE: u64 = 1000;
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives an independent seed for trial `index` of a run seeded with `seed` (SplitMix64).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
