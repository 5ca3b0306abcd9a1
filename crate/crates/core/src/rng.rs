//! Seed derivation and the deterministic generator used everywhere.
//!
//! All randomness flows through [`seeded_rng`], a ChaCha8 stream keyed by a
//! 64-bit seed. Independent streams (per trial, per restart, per optimizer
//! start) are keyed by [`mix_seed`] so results never depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stable 64-bit mix of a master seed and a stream index.
///
/// For a fixed master seed the map `index -> mix_seed(master, index)` is a
/// bijection on `u64`, so derived seeds are pairwise distinct.
pub fn mix_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
