use serde::{Deserialize, Serialize};

use super::noise::{laplace_sample, NoiseSource};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SparseAnswer {
    /// The noisy query value fell at or below the noisy threshold.
    Below(f64),
    /// ⊥
    Above,
}

impl SparseAnswer {
    pub fn is_below(&self) -> bool {
        matches!(self, SparseAnswer::Below(_))
    }
}

/// Streaming below-threshold sparse vector session.
///
/// The threshold is perturbed once with Lap(2γ/ε); every query gets fresh
/// Lap(2cγ/ε) noise. After `c` below-threshold answers the session halts and
/// refuses further queries.
#[derive(Debug, Clone)]
pub struct SparseSession {
    sensitivity: f64,
    threshold: f64,
    budget: usize,
    epsilon: f64,
    noisy_threshold: f64,
    count: usize,
    answered: usize,
    halted: bool,
}

impl SparseSession {
    pub fn new(sensitivity: f64, threshold: f64, budget: usize, epsilon: f64, src: &mut NoiseSource) -> Result<Self> {
        if !(sensitivity >= 0.0) {
            return Err(Error::param(format!("sensitivity must be >= 0, got {sensitivity}")));
        }
        if budget == 0 {
            return Err(Error::param("sparse budget c must be positive"));
        }
        if !(epsilon > 0.0) {
            return Err(Error::param(format!("epsilon must be positive, got {epsilon}")));
        }
        if !threshold.is_finite() {
            return Err(Error::param("sparse threshold must be finite"));
        }
        let threshold_scale = 2.0 * sensitivity / epsilon;
        let noisy_threshold = threshold + laplace_sample(threshold_scale, src)?;
        Ok(SparseSession {
            sensitivity,
            threshold,
            budget,
            epsilon,
            noisy_threshold,
            count: 0,
            answered: 0,
            halted: false,
        })
    }

    /// Per-query noise scale 2cγ/ε.
    pub fn query_scale(&self) -> f64 {
        2.0 * self.budget as f64 * self.sensitivity / self.epsilon
    }

    pub fn threshold_scale(&self) -> f64 {
        2.0 * self.sensitivity / self.epsilon
    }

    pub fn answer(&mut self, query_value: f64, src: &mut NoiseSource) -> Result<SparseAnswer> {
        if self.halted {
            return Err(Error::State(format!("sparse session halted after {} below-threshold answers", self.count)));
        }
        let noisy = query_value + laplace_sample(self.query_scale(), src)?;
        self.answered += 1;
        if noisy <= self.noisy_threshold {
            self.count += 1;
            if self.count >= self.budget {
                self.halted = true;
            }
            Ok(SparseAnswer::Below(noisy))
        } else {
            Ok(SparseAnswer::Above)
        }
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn noisy_threshold(&self) -> f64 {
        self.noisy_threshold
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn answered(&self) -> usize {
        self.answered
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn is_halted(&self) -> bool {
        self.halted
    }
}

/// Accuracy α = 4cγ(ln N + ln(2c/β))/ε of a sparse session answering `N`
/// queries, holding with probability 1 − β.
pub fn sparse_accuracy_bound(c: usize, gamma: f64, queries: usize, beta: f64, epsilon: f64) -> f64 {
    let c = c as f64;
    4.0 * c * gamma * ((queries as f64).ln() + (2.0 * c / beta).ln()) / epsilon
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_threshold_stream() {
        let mut src = NoiseSource::noise_off(0);
        let mut s = SparseSession::new(0.1, 2.0, 1, 1.0, &mut src).unwrap();
        assert_eq!(s.answer(5.0, &mut src).unwrap(), SparseAnswer::Above);
        assert_eq!(s.answer(1.0, &mut src).unwrap(), SparseAnswer::Below(1.0));
        assert!(s.is_halted());
        assert!(matches!(s.answer(7.0, &mut src), Err(Error::State(_))));
        assert_eq!(s.count(), 1);
    }

    #[test]
    fn equal_to_threshold_counts_as_below() {
        let mut src = NoiseSource::noise_off(0);
        let mut s = SparseSession::new(1.0, -4.0, 2, 1.0, &mut src).unwrap();
        assert!(s.answer(-4.0, &mut src).unwrap().is_below());
        assert!(!s.is_halted());
        assert!(s.answer(-5.0, &mut src).unwrap().is_below());
        assert!(s.is_halted());
    }

    #[test]
    fn scales() {
        let mut src = NoiseSource::noisy(3);
        let s = SparseSession::new(0.5, 0.0, 3, 2.0, &mut src).unwrap();
        assert_eq!(s.query_scale(), 1.5);
        assert_eq!(s.threshold_scale(), 0.5);
    }

    #[test]
    fn accuracy_formula() {
        let a = sparse_accuracy_bound(1, 0.01, 100, 0.05, 0.1);
        let expected = 4.0 * 0.01 * ((100f64).ln() + (40f64).ln()) / 0.1;
        assert!((a - expected).abs() < 1e-12);
        assert!((a - 3.317_619_856).abs() < 1e-8);
    }

    #[test]
    fn bad_parameters() {
        let mut src = NoiseSource::noisy(3);
        assert!(SparseSession::new(0.1, 0.0, 0, 1.0, &mut src).is_err());
        assert!(SparseSession::new(0.1, 0.0, 1, 0.0, &mut src).is_err());
        assert!(SparseSession::new(-0.1, 0.0, 1, 1.0, &mut src).is_err());
        // zero sensitivity needs noise switched off
        assert!(SparseSession::new(0.0, 0.0, 1, 1.0, &mut src).is_err());
        let mut off = NoiseSource::noise_off(3);
        assert!(SparseSession::new(0.0, 0.0, 1, 1.0, &mut off).is_ok());
    }

    #[test]
    fn symmetric_at_threshold() {
        // query exactly at T: below iff the query noise <= threshold noise
        let mut src = NoiseSource::noisy(99);
        let trials = 10_000;
        let mut below = 0;
        for _ in 0..trials {
            let mut s = SparseSession::new(0.2, 1.0, 1, 1.0, &mut src).unwrap();
            if s.answer(1.0, &mut src).unwrap().is_below() {
                below += 1;
            }
        }
        let rate = below as f64 / trials as f64;
        assert!((rate - 0.5).abs() <= 0.02, "rate {rate}");
    }
}
