//! Deterministic seed derivation.
//!
//! Every random stream in the crate is a ChaCha8 generator keyed by a seed
//! derived from a parent seed and a path of stream labels, so results do not
//! depend on evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream labels used across the pipeline.
pub mod stream {
    pub const GENERATOR: u64 = 0x47454e;
    pub const DATASET: u64 = 0x444154;
    pub const SUBSET: u64 = 0x535542;
    pub const CNR: u64 = 0x434e52;
    pub const DRAWS: u64 = 0x445257;
    pub const TRAIN: u64 = 0x54524e;
    pub const REPLICA: u64 = 0x52504c;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `path` into `seed`. Distinct paths give unrelated child seeds.
pub fn derive(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &label| splitmix64(acc ^ splitmix64(label)))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derived_rng(seed: u64, path: &[u64]) -> ChaCha8Rng {
    rng(derive(seed, path))
}
