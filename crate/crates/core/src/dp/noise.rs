use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::mix_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    Noisy,
    /// Every Laplace draw is exactly zero and the exponential mechanism
    /// returns the lowest-index argmax.
    NoiseOff,
}

/// Seeded randomness for the private mechanisms.
///
/// Identical seed and call sequence give identical draws. The source is
/// single-owner mutable state: move it between threads, don't share it.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    seed: u64,
    mode: NoiseMode,
    rng: ChaCha20Rng,
}

impl NoiseSource {
    pub fn new(seed: u64, mode: NoiseMode) -> Self {
        NoiseSource { seed, mode, rng: ChaCha20Rng::seed_from_u64(seed) }
    }

    pub fn noisy(seed: u64) -> Self {
        Self::new(seed, NoiseMode::Noisy)
    }

    pub fn noise_off(seed: u64) -> Self {
        Self::new(seed, NoiseMode::NoiseOff)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mode(&self) -> NoiseMode {
        self.mode
    }

    pub fn is_noise_off(&self) -> bool {
        self.mode == NoiseMode::NoiseOff
    }

    /// Uniform draw from the open interval (0, 1).
    pub fn uniform_open(&mut self) -> f64 {
        loop {
            let u: f64 = self.rng.gen();
            if u > 0.0 {
                return u;
            }
        }
    }

    /// Fresh 64-bit seed for a child stream (e.g. the rounding coins of a
    /// profile sampler). Consumed in both modes so transcripts line up.
    pub fn child_seed(&mut self) -> u64 {
        mix_seed(self.rng.gen::<u64>(), self.seed)
    }

    pub fn laplace(&mut self, scale: f64) -> Result<f64> {
        laplace_sample(scale, self)
    }
}

/// Inverse CDF of the centred Laplace distribution with scale `b`.
pub fn laplace_from_uniform(u: f64, b: f64) -> f64 {
    let c = u - 0.5;
    if c == 0.0 {
        return 0.0;
    }
    -b * c.signum() * (1.0 - 2.0 * c.abs()).ln()
}

/// Draw from Lap(b). `b = 0` is only accepted with noise switched off.
pub fn laplace_sample(scale: f64, src: &mut NoiseSource) -> Result<f64> {
    if src.is_noise_off() {
        if scale.is_nan() || scale < 0.0 {
            return Err(Error::param(format!("laplace scale must be >= 0, got {scale}")));
        }
        return Ok(0.0);
    }
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::param(format!("laplace scale must be positive and finite, got {scale}")));
    }
    let u = src.uniform_open();
    Ok(laplace_from_uniform(u, scale))
}
