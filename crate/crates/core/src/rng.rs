//! Deterministic, splittable randomness.
//!
//! Everything seeded in this crate goes through ChaCha8 with seeds derived
//! by a fixed mix, so replays survive library upgrades and independent
//! trials can run concurrently on disjoint streams.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Identifier of the one supported generator; configs name it explicitly so
/// a replay can refuse to run against anything else.
pub const RNG_ALGORITHM: &str = "chacha8";

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent stream seed from a root seed and a label
/// (splitmix64 finalizer over the pair).
pub fn derive_seed(root: u64, label: u64) -> u64 {
    let mut z = root ^ label.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_seed_same_stream() {
        let a: Vec<u64> = (0..8).map(|_| 0).collect::<Vec<_>>();
        let mut r1 = rng_from_seed(42);
        let mut r2 = rng_from_seed(42);
        let s1: Vec<u64> = a.iter().map(|_| r1.random()).collect();
        let s2: Vec<u64> = a.iter().map(|_| r2.random()).collect();
        assert_eq!(s1, s2);
    }

    #[test]
    fn derived_seeds_differ_per_label() {
        let s: Vec<u64> = (0..100).map(|i| derive_seed(7, i)).collect();
        let mut dedup = s.clone();
        dedup.sort_unstable();
        dedup.dedup();
        assert_eq!(dedup.len(), s.len());
    }
}
