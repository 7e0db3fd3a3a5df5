//! Seeded random numbers used for noise synthesis and multistart sampling.
//!
//! The generator is fixed so that noisy data sets can be regenerated outside
//! this crate:
//!
//! * bits: PCG64 (`pcg_setseq_128_xsl_rr_64`), constructed as
//!   `Pcg64::new(seed as u128, STREAM)` with [`STREAM`] below. With
//!   `inc = 2 STREAM + 1` and the standard 128-bit multiplier `MULT`, the
//!   state starts at `(seed + inc) MULT + inc`; each draw first advances
//!   `state <- state MULT + inc`, then outputs XSL-RR of the new state;
//! * uniforms: `u = (next_u64() >> 11) * 2^-53`, a value in `[0, 1)`;
//! * standard normals: Box-Muller, cosine branch only, one normal per pair of
//!   uniforms: `g = sqrt(-2 ln(1 - u1)) * cos(2 pi u2)`.

use rand_core::Rng;
use rand_pcg::Pcg64;

/// Stream selector passed to `Pcg64::new`.
pub const STREAM: u128 = 0xa02b_dbf7_bb3c_0a7a_c28f_a16a_64ab_f96;

const INV_2_53: f64 = 1.0 / 9_007_199_254_740_992.0;

pub struct SeededRng {
    inner: Pcg64,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self { inner: Pcg64::new(u128::from(seed), STREAM) }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * INV_2_53
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * (1.0 - u1).ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// Uniform integer in `0..n`. `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }

    /// Derives an independent child seed, used to hand out per-task generators.
    pub fn fork_seed(&mut self) -> u64 {
        self.next_u64()
    }
}
