//! Seeded randomness with a pinned algorithm.
//!
//! All stochastic steps draw from ChaCha8 (`rand_chacha` 0.3) seeded through
//! `SeedableRng::seed_from_u64`. Ranges use rejection sampling over `u64`
//! and shuffles are Fisher–Yates from the last index down, so outputs depend
//! only on the seed and this file.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Generator type behind every seeded draw.
pub type Generator = ChaCha8Rng;

/// Recorded in manifests next to every seed.
pub const GENERATOR_NAME: &str = "chacha8/rand_chacha-0.3/seed_from_u64; fisher-yates; u64 rejection ranges";

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent substream `stream` of `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform integer in `0..bound`. `bound` must be nonzero.
pub fn below<R: RngCore>(rng: &mut R, bound: u64) -> u64 {
    assert!(bound > 0, "empty range");
    // 2^64 mod bound; values below it would bias the low residues.
    let threshold = bound.wrapping_neg() % bound;
    loop {
        let v = rng.next_u64();
        if v >= threshold {
            return v % bound;
        }
    }
}

pub fn shuffle<T, R: RngCore>(items: &mut [T], rng: &mut R) {
    for i in (1..items.len()).rev() {
        let j = below(rng, i as u64 + 1) as usize;
        items.swap(i, j);
    }
}
