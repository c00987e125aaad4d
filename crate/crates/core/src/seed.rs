//! Counter-based seed derivation.
//!
//! Every stage draws from its own generator seeded with
//! `derive(root, stage, index)`, so stages (and items within a stage) can be
//! regenerated independently of the order in which they run. The derivation
//! mixes the root with the stage tag and then with `index + 1` through the
//! SplitMix64 finalizer.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Pipeline stages that consume randomness.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stage {
    PointSampling = 1,
    JointConfig = 2,
    ObjectCamera = 3,
    PartCamera = 4,
    BenchScene = 5,
}

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive(root: u64, stage: Stage, index: u64) -> u64 {
    let s = splitmix64(root ^ (stage as u64).wrapping_mul(GOLDEN));
    splitmix64(s ^ index.wrapping_add(1).wrapping_mul(GOLDEN))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stage_rng(root: u64, stage: Stage, index: u64) -> ChaCha8Rng {
    rng(derive(root, stage, index))
}
