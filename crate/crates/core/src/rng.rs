//! Deterministic, seedable randomness.
//!
//! Every random draw in the crate goes through [`SeededRng`]:
//!
//! * generator: ChaCha20 (`rand_chacha` 0.3, `ChaCha20Rng`), seeded through
//!   `SeedableRng::seed_from_u64` (PCG32 expansion of the 64-bit seed into the
//!   256-bit key). The ChaCha stream is specified bit-for-bit and does not
//!   depend on the platform.
//! * uniforms: the top 53 bits of one `next_u64` scaled by 2^-53.
//! * Gaussians: basic Box–Muller using the cosine branch only, with `libm`
//!   for `ln`, `sqrt` and `cos` so results do not depend on the system libm.
//!   Each standard normal consumes exactly two `u64` words.
//!
//! Sub-streams are derived by mixing the parent seed with a stream id through
//! SplitMix64.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};

const TWO_POW_NEG_53: f64 = 1.0 / (1u64 << 53) as f64;

#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha20Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent generator for `stream`, a pure function of `(seed, stream)`.
    pub fn derive(&self, stream: u64) -> Self {
        Self::new(mix_seed(self.seed, stream))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * TWO_POW_NEG_53
    }

    /// Uniform integer in `[0, n)`. `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        self.inner.gen_range(0..n as u64) as usize
    }

    pub fn standard_normal(&mut self) -> f64 {
        // 1 - u lies in (0, 1], so the log is finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(std::f64::consts::TAU * u2)
    }

    /// One draw from N(0, sigma^2). `sigma == 0` returns exactly `0.0` but
    /// still advances the stream, so noise-free runs stay aligned with noisy
    /// runs draw for draw.
    pub fn gaussian(&mut self, sigma: f64) -> Result<f64> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::param("sigma", format!("must be finite and >= 0, got {sigma}")));
        }
        let z = self.standard_normal();
        Ok(if sigma == 0.0 { 0.0 } else { sigma * z })
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

/// SplitMix64 finalizer applied to `seed ^ golden * (stream + 1)`.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `gaussian_draw` from the operation list: a single N(0, sigma^2) sample.
pub fn gaussian_draw(rng: &mut SeededRng, sigma: f64) -> Result<f64> {
    rng.gaussian(sigma)
}
