//! Deterministic random streams.
//!
//! All randomness comes from SplitMix64 (state initialized to the seed, output
//! function as in the public-domain reference). Derived quantities:
//!
//! * uniform in [0,1): `(r >> 11) * 2^-53`
//! * standard normal: Box–Muller with `u1 = 1 - uniform`, `u2 = uniform`,
//!   `z = sqrt(-2 ln u1) * cos(2 pi u2)`; the sine branch is discarded so every
//!   normal consumes exactly two raw draws.
//!
//! These rules are fixed so instances can be regenerated bit-exactly in any
//! language at binary64.

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

pub struct Stream {
    inner: SplitMix64,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Stream { inner: SplitMix64::seed_from_u64(seed) }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    pub fn normal_vec(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.normal()).collect()
    }

    /// Uniform sample from the Euclidean unit ball in `n` dimensions.
    pub fn unit_ball(&mut self, n: usize) -> Vec<f64> {
        let mut d = self.normal_vec(n);
        let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        let r = self.uniform().powf(1.0 / n as f64);
        if norm == 0.0 {
            d[0] = r;
            return d;
        }
        for v in d.iter_mut() {
            *v *= r / norm;
        }
        d
    }

    /// Uniform sample from the max-norm unit ball.
    pub fn unit_box(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.uniform_in(-1.0, 1.0)).collect()
    }
}

/// Derive an independent seed for sub-stream `k`.
pub fn substream_seed(seed: u64, k: u64) -> u64 {
    let mut s = Stream::new(seed ^ k.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    s.next_u64()
}
