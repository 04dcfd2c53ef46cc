//! Seeded randomness with a fixed, platform-independent stream.
//!
//! Every stochastic run records its 64-bit seed and draws from a ChaCha
//! stream, so traces are reproducible bit-for-bit across platforms and
//! across library versions. Index sampling uses rejection sampling rather
//! than a modulo, which would bias small indices.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform index in `0..n` without modulo bias.
pub fn uniform_index(rng: &mut ChaCha8Rng, n: usize) -> usize {
    assert!(n > 0, "uniform_index requires n > 0");
    let n = n as u64;
    // largest multiple of n representable in u64
    let zone = u64::MAX - u64::MAX % n;
    loop {
        let v = rng.next_u64();
        if v < zone {
            return (v % n) as usize;
        }
    }
}

/// Uniform draw in `[0, 1)` with 53-bit resolution.
pub fn uniform_unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform draw in `[lo, hi)`; degenerate ranges return `lo` exactly.
pub fn uniform_range(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        // still consume one draw so instance generation stays aligned
        let _ = rng.next_u64();
        return lo;
    }
    lo + (hi - lo) * uniform_unit(rng)
}
