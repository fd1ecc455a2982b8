//! Seed derivation for independent, schedule-free random streams.
//!
//! Every randomised task (a tree in a forest, a boosting round, a SMOTE row)
//! draws from its own ChaCha stream keyed by the run seed and a task path, so
//! results never depend on how work is distributed across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix a base seed with a path of stream identifiers.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn stream(seed: u64, path: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(seed, path))
}

// Stream tags keep unrelated consumers of one seed apart.
pub const TAG_SPLIT: u64 = 1;
pub const TAG_KFOLD: u64 = 2;
pub const TAG_SMOTE: u64 = 3;
pub const TAG_FOREST: u64 = 4;
pub const TAG_ADABOOST: u64 = 5;
pub const TAG_GBT: u64 = 6;
pub const TAG_OBLIVIOUS: u64 = 7;
pub const TAG_SYNTH: u64 = 8;
pub const TAG_SELECTION: u64 = 9;
pub const TAG_TREE: u64 = 10;
