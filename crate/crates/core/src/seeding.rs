//! Deterministic seed derivation.
//!
//! Every randomized stage of the pipeline owns a base seed and derives
//! per-item seeds from `(base, index)` instead of sharing one RNG stream.
//! That keeps each item's draws independent of iteration order and lets
//! stages be re-run or subset without shifting anyone else's randomness.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Mixes a base seed with a stream index into a fresh, well-dispersed seed.
///
/// The mix is two rounds of the splitmix64 finalizer over
/// `base ^ (index * GOLDEN_GAMMA)`, so nearby `(base, index)` pairs land far
/// apart in seed space.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;
    let mut z = base ^ index.wrapping_mul(GOLDEN_GAMMA);
    for _ in 0..2 {
        z = z.wrapping_add(GOLDEN_GAMMA);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
    }
    z
}

/// Returns a ChaCha8 RNG seeded from `(base, index)`.
pub fn rng_for(base: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, index))
}

/// Returns `0..n` in a seed-determined random order.
///
/// Used wherever a reproducible subset or split is taken: callers keep a
/// prefix of the permutation.
pub fn shuffled_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    indices
}
