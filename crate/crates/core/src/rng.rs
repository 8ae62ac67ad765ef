//! Deterministic random streams.
//!
//! Every stream is a xoshiro256** generator whose 256-bit state is expanded from a
//! single 64-bit seed with splitmix64. Per-sample streams are derived from the
//! pipeline's master seed and the sample index alone, so the draws seen by sample
//! `i` never depend on how many samples ran before it or on which thread.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;
use thiserror::Error;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("empty range: lower bound {lo} exceeds upper bound {hi}")]
pub struct RangeError {
    pub lo: f64,
    pub hi: f64,
}

/// splitmix64 output finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A single-owner stream of uniform draws.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngStream {
    inner: Xoshiro256StarStar,
}

impl RngStream {
    pub fn from_seed(seed: u64) -> Self {
        RngStream {
            inner: Xoshiro256StarStar::seed_from_u64(seed),
        }
    }

    /// Raw 64-bit word.
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform real in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn unit_real(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform real in `[lo, hi)`; returns `lo` when `lo == hi`.
    pub fn real(&mut self, lo: f64, hi: f64) -> Result<f64, RangeError> {
        if !(lo <= hi) {
            return Err(RangeError { lo, hi });
        }
        let v = lo + self.unit_real() * (hi - lo);
        // lo + u*(hi-lo) can round up to hi for u just below 1.
        Ok(if v >= hi && hi > lo { lo.max(next_down(hi)) } else { v })
    }

    /// Uniform integer in `[lo, hi]` (inclusive) by rejection sampling.
    ///
    /// Counts as one logical draw even when several raw words are consumed.
    pub fn int(&mut self, lo: i64, hi: i64) -> Result<i64, RangeError> {
        if lo > hi {
            return Err(RangeError {
                lo: lo as f64,
                hi: hi as f64,
            });
        }
        let span = (hi as i128 - lo as i128 + 1) as u128;
        if span > u64::MAX as u128 {
            return Ok(self.next_u64() as i64);
        }
        let span = span as u64;
        // Words below `threshold` would bias the low residues.
        let threshold = span.wrapping_neg() % span;
        loop {
            let r = self.next_u64();
            if r >= threshold {
                return Ok((lo as i128 + (r % span) as i128) as i64);
            }
        }
    }
}

fn next_down(x: f64) -> f64 {
    if x.is_nan() || x == f64::NEG_INFINITY {
        return x;
    }
    if x == 0.0 {
        return -f64::from_bits(1);
    }
    let bits = x.to_bits();
    if x > 0.0 {
        f64::from_bits(bits - 1)
    } else {
        f64::from_bits(bits + 1)
    }
}

/// The stream used for sample `sample_index` of a run seeded with `master_seed`.
pub fn derive_sample_rng(master_seed: u64, sample_index: u64) -> RngStream {
    let seed = mix64(master_seed ^ mix64(sample_index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)));
    RngStream::from_seed(seed)
}
