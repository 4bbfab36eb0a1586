//! Counter-based seed derivation.
//!
//! Every random stream in the crate is a ChaCha8 generator keyed by a seed
//! derived from the master seed and a list of integer tags (stream kind,
//! deployment, drop, cell, ...). Work can therefore be split across threads
//! in any order without changing results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream kinds used as the first tag.
pub mod tag {
    pub const HOTSPOT_DROP: u64 = 1;
    pub const REGION_SAMPLES: u64 = 2;
    pub const UE_DROP: u64 = 3;
    pub const CHANNEL_DRAW: u64 = 4;
    pub const DEPLOYMENT: u64 = 5;
    pub const SIM_SEED: u64 = 6;
    pub const ANALYSIS_SEED: u64 = 7;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `tags` into `seed`. Distinct tag lists give unrelated seeds.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    let mut h = splitmix64(seed);
    for &t in tags {
        h = splitmix64(h ^ splitmix64(t.wrapping_add(0x632B_E59B_D9B4_E019)));
    }
    h
}

pub fn stream(seed: u64, tags: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(seed, tags))
}
