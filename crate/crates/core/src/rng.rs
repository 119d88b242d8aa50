//! Seed derivation and deterministic generator construction.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic generator for a top-level seed.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for member/stream `index` of `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix(seed ^ mix(index.wrapping_add(0x51_7CC1_B727_220A)))
}

/// Counter-based generator keyed by `(seed, row, column)`.
///
/// Each row is its own ChaCha stream and each column starts at a fixed word
/// offset inside it, so the values a cell sees never depend on the order in
/// which cells are generated. A column owns 64 words (32 `u64` draws).
pub fn cell_rng(seed: u64, row: u64, column: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(row);
    rng.set_word_pos(u128::from(column) * 64);
    rng
}
