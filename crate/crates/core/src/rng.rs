//! Thin deterministic mappings from raw RNG output to floats and indices.
//!
//! Keeping these conversions local (rather than going through a distribution
//! library) pins the exact bit pattern of every draw to this crate, which is
//! what makes "same seed ⇒ bitwise-identical run" a property we can test and
//! keep across dependency upgrades.

use rand_core::RngCore;

/// Uniform draw in `[0, 1)` from the top 53 bits of one `u64`.
pub fn u01<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    (rng.next_u64() >> 11) as f64 * SCALE
}

/// Uniform draw in `[lo, hi)`.
pub fn uniform_in<R: RngCore + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + u01(rng) * (hi - lo)
}

/// Uniform index in `[0, n)` via a widening multiply (no modulo bias spike).
///
/// # Panics
/// Panics if `n == 0`.
pub fn uniform_index<R: RngCore + ?Sized>(rng: &mut R, n: usize) -> usize {
    assert!(n > 0, "uniform_index requires n > 0");
    ((u128::from(rng.next_u64()) * n as u128) >> 64) as usize
}
