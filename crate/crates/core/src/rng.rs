//! Seed derivation and per-query random sub-streams.
//!
//! Every run owns one [`BanditRng`]. Predictor calls inside an agent step get
//! their own stream keyed by `(run seed, iteration, query index)`, so results do
//! not depend on the order in which concurrent calls complete.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The random stream type used throughout the crate.
pub type BanditRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 finalizer; a bijection on `u64`.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for repetition `rep` of an experiment: `mix64(base + (rep + 1) * φ)`
/// with φ the 64-bit golden-ratio constant. Injective in `rep` for a fixed base.
pub fn derive_seed(base_seed: u64, rep: u64) -> u64 {
    mix64(base_seed.wrapping_add(rep.wrapping_add(1).wrapping_mul(GOLDEN)))
}

/// Named sub-seeds of a run seed, used to separate environment construction
/// from agent-side randomness.
pub fn sub_seed(run_seed: u64, tag: u64) -> u64 {
    mix64(run_seed ^ mix64(tag.wrapping_mul(GOLDEN)))
}

pub fn rng_from_seed(seed: u64) -> BanditRng {
    BanditRng::seed_from_u64(seed)
}

/// Builds independent streams for the predictor calls of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamFactory {
    seed: u64,
}

impl StreamFactory {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Stream for query `index` of iteration `iteration`. Distinct triples give
    /// distinct ChaCha keys.
    pub fn stream(&self, iteration: u64, index: u64) -> BanditRng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&iteration.to_le_bytes());
        key[16..24].copy_from_slice(&index.to_le_bytes());
        key[24..].copy_from_slice(b"predict\0");
        BanditRng::from_seed(key)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use std::collections::HashSet;

    #[test]
    fn derive_seed_is_injective_over_repetitions() {
        let seeds: HashSet<u64> = (0..10_000).map(|r| derive_seed(42, r)).collect();
        assert_eq!(seeds.len(), 10_000);
    }

    #[test]
    fn derive_seed_is_stable() {
        // Frozen values: changing these breaks reproducibility of stored runs.
        assert_eq!(derive_seed(0, 0), mix64(GOLDEN));
        assert_eq!(mix64(0), 0);
        assert_eq!(derive_seed(7, 3), mix64(7u64.wrapping_add(4u64.wrapping_mul(GOLDEN))));
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let f = StreamFactory::new(9);
        let a: u64 = f.stream(1, 2).random();
        let b: u64 = f.stream(1, 2).random();
        let c: u64 = f.stream(2, 1).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
