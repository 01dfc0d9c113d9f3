//! Seeded randomness. Every generator draws from a ChaCha8 stream keyed by
//! the caller's 64-bit seed, with a separate stream id per purpose.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) mod streams {
    pub const ITEMS: u64 = 1;
    pub const DELETIONS: u64 = 2;
    pub const ORDERING: u64 = 3;
    pub const PERMUTATION: u64 = 4;
}

/// Deterministic generator for `(seed, stream)`.
pub fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seed of the `rep`-th repetition of an experiment.
pub fn rep_seed(seed: u64, rep: usize) -> u64 {
    mix(seed ^ mix(rep as u64 + 1))
}
