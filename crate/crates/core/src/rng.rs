//! Seeded random streams.
//!
//! Every stochastic operation takes a `u64` seed and builds its own
//! generator. Replications and parties derive sub-seeds with [`substream`]
//! so that no two consumers ever share generator state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Deterministic child seed for stream `index` of `seed` (SplitMix64 finalizer).
pub fn substream(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15_u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substreams_differ() {
        let a = substream(7, 0);
        let b = substream(7, 1);
        assert_ne!(a, b);
        assert_eq!(a, substream(7, 0));
    }
}
