use super::noise::NoiseSource;
use crate::error::{Error, Result};

/// Candidate outcomes with their scores and the score sensitivity Δ(q).
#[derive(Debug, Clone)]
pub struct ScoredOutcomeSet<T> {
    outcomes: Vec<T>,
    scores: Vec<f64>,
    sensitivity: f64,
}

impl<T> ScoredOutcomeSet<T> {
    pub fn new(outcomes: Vec<T>, scores: Vec<f64>, sensitivity: f64) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::param("exponential mechanism needs at least one outcome"));
        }
        if outcomes.len() != scores.len() {
            return Err(Error::param(format!("{} outcomes but {} scores", outcomes.len(), scores.len())));
        }
        if !(sensitivity > 0.0) {
            return Err(Error::param(format!("score sensitivity must be positive, got {sensitivity}")));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::param("scores must be finite"));
        }
        Ok(ScoredOutcomeSet { outcomes, scores, sensitivity })
    }

    pub fn outcomes(&self) -> &[T] {
        &self.outcomes
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn sensitivity(&self) -> f64 {
        self.sensitivity
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

impl ScoredOutcomeSet<usize> {
    /// Outcomes are the indices `0..scores.len()`.
    pub fn indexed(scores: Vec<f64>, sensitivity: f64) -> Result<Self> {
        let outcomes = (0..scores.len()).collect();
        Self::new(outcomes, scores, sensitivity)
    }
}

fn argmax_lowest(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Selection probabilities ∝ exp(ε q / 2Δ), stabilised by subtracting the
/// maximum score before exponentiating.
pub fn exponential_probabilities(scores: &[f64], epsilon: f64, sensitivity: f64) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scores.iter().map(|&s| (epsilon * (s - max) / (2.0 * sensitivity)).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// Sample an outcome index. With noise switched off this is the argmax with
/// lowest-index tie-breaking.
pub fn exponential_mechanism<T>(set: &ScoredOutcomeSet<T>, epsilon: f64, src: &mut NoiseSource) -> Result<usize> {
    if !(epsilon > 0.0) {
        return Err(Error::param(format!("epsilon must be positive, got {epsilon}")));
    }
    if src.is_noise_off() {
        return Ok(argmax_lowest(&set.scores));
    }
    let probs = exponential_probabilities(&set.scores, epsilon, set.sensitivity);
    let u = src.uniform_open();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return Ok(i);
        }
    }
    // rounding left `acc` a hair under 1; fall back to the last positive weight
    Ok(probs.iter().rposition(|&p| p > 0.0).unwrap_or(0))
}

/// Utility loss 2Δ·ln(|R|/β)/ε that holds with probability 1 − β.
pub fn exp_mechanism_accuracy_bound(outcomes: f64, sensitivity: f64, epsilon: f64, beta: f64) -> Result<f64> {
    if !(outcomes >= 1.0) || !(sensitivity > 0.0) || !(epsilon > 0.0) || !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::param(format!(
            "bad accuracy-bound arguments |R|={outcomes} Δ={sensitivity} ε={epsilon} β={beta}"
        )));
    }
    Ok(2.0 * sensitivity * (outcomes / beta).ln() / epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_off_argmax_first() {
        let set = ScoredOutcomeSet::indexed(vec![3.0, 7.0, 7.0], 1.0).unwrap();
        let mut src = NoiseSource::noise_off(0);
        assert_eq!(exponential_mechanism(&set, 1.0, &mut src).unwrap(), 1);
    }

    #[test]
    fn empty_set_rejected() {
        assert!(ScoredOutcomeSet::<usize>::indexed(vec![], 1.0).is_err());
        assert!(ScoredOutcomeSet::new(vec![1, 2], vec![0.0], 1.0).is_err());
    }

    #[test]
    fn equal_scores_fair_coin() {
        let set = ScoredOutcomeSet::indexed(vec![0.4, 0.4], 1.0).unwrap();
        let mut src = NoiseSource::noisy(5);
        let n = 100_000;
        let ones = (0..n).filter(|_| exponential_mechanism(&set, 1.0, &mut src).unwrap() == 1).count();
        let p = ones as f64 / n as f64;
        assert!((p - 0.5).abs() <= 0.01, "p {p}");
    }

    #[test]
    fn ratio_is_e() {
        // scores {0,1}, Δ=1, ε=2: ratio exp(2·1/2) = e
        let set = ScoredOutcomeSet::indexed(vec![0.0, 1.0], 1.0).unwrap();
        let mut src = NoiseSource::noisy(11);
        let n = 200_000;
        let high = (0..n).filter(|_| exponential_mechanism(&set, 2.0, &mut src).unwrap() == 1).count();
        let ratio = high as f64 / (n - high) as f64;
        assert!((ratio / std::f64::consts::E - 1.0).abs() <= 0.03, "ratio {ratio}");
    }

    #[test]
    fn probabilities_stable_for_huge_scores() {
        let p = exponential_probabilities(&[1e6, 1e6 + 1.0], 2.0, 1.0);
        assert!((p[1] / p[0] - std::f64::consts::E).abs() < 1e-9);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn accuracy_bound_values() {
        assert_eq!(exp_mechanism_accuracy_bound(1.0, 1.0, 1.0, 1.0).unwrap(), 0.0);
        let e = std::f64::consts::E;
        assert!((exp_mechanism_accuracy_bound(e, 1.0, 1.0, 1.0).unwrap() - 2.0).abs() < 1e-12);
        let v = exp_mechanism_accuracy_bound(100.0, 0.5, 2.0, 0.01).unwrap();
        assert!((v - 0.5 * (1e4f64).ln()).abs() < 1e-12);
        assert!(exp_mechanism_accuracy_bound(10.0, 1.0, 1.0, 0.0).is_err());
    }
}
