//! Seeded random number generation.
//!
//! Every random quantity in the toolkit is drawn from a [`SimRng`] that was
//! seeded explicitly. Work items (sweep cells, frames, blocks) derive their own
//! generator from a base seed and their coordinates, so results do not depend on
//! how the work is scheduled across threads.

use rand::SeedableRng;

/// ChaCha-based generator. Stands in for the quantum random number generator of
/// a real system.
pub type SimRng = rand_chacha::ChaCha12Rng;

/// SplitMix64 finaliser.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a base seed and a path of coordinates.
///
/// The mapping is injective in practice and order sensitive:
/// `derive_seed(s, &[1, 2]) != derive_seed(s, &[2, 1])`.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    let mut h = mix64(base);
    for (depth, &p) in path.iter().enumerate() {
        h = mix64(h ^ mix64(p.wrapping_add((depth as u64 + 1).wrapping_mul(0xA24B_AED4_963E_E407))));
    }
    h
}

/// Generator for the work item at `path` below `base`.
pub fn rng_for(base: u64, path: &[u64]) -> SimRng {
    SimRng::seed_from_u64(derive_seed(base, path))
}
