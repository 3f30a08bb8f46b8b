use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub label: String,
    pub epsilon: f64,
    pub delta: f64,
}

/// Bookkeeping of the (ε, δ) spent by the mechanisms of one run. It does not
/// enforce anything; algorithms declare their splits explicitly.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PrivacyLedger {
    entries: Vec<LedgerEntry>,
}

impl PrivacyLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, label: impl Into<String>, epsilon: f64, delta: f64) {
        self.entries.push(LedgerEntry { label: label.into(), epsilon, delta });
    }

    /// `count` identical entries, e.g. the per-round selections of an
    /// iterative mechanism.
    pub fn record_repeated(&mut self, label: &str, epsilon: f64, delta: f64, count: usize) {
        for t in 0..count {
            self.record(format!("{label}[{t}]"), epsilon, delta);
        }
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn basic_total(&self) -> (f64, f64) {
        self.entries.iter().fold((0.0, 0.0), |(e, d), x| (e + x.epsilon, d + x.delta))
    }

    pub fn compose_adaptive(&self, delta_prime: f64) -> Result<(f64, f64)> {
        compose_adaptive(self, delta_prime)
    }
}

/// Totals for the ledger. When every entry shares the same ε the advanced
/// T-fold bound ε√(2T ln(1/δ′)) + Tε(e^ε − 1) is used with δ_total = Σδ + δ′;
/// heterogeneous ledgers fall back to simple summation.
pub fn compose_adaptive(ledger: &PrivacyLedger, delta_prime: f64) -> Result<(f64, f64)> {
    if !(delta_prime > 0.0 && delta_prime < 1.0) {
        return Err(Error::param(format!("δ′ must lie in (0,1), got {delta_prime}")));
    }
    let entries = ledger.entries();
    if entries.iter().any(|e| e.epsilon < 0.0 || e.delta < 0.0) {
        return Err(Error::param("ledger entries must be nonnegative"));
    }
    let Some(first) = entries.first() else {
        return Ok((0.0, 0.0));
    };
    let homogeneous = entries.iter().all(|e| e.epsilon == first.epsilon);
    if !homogeneous {
        return Ok(ledger.basic_total());
    }
    let t = entries.len() as f64;
    let eps = first.epsilon;
    let eps_total = eps * (2.0 * t * (1.0 / delta_prime).ln()).sqrt() + t * eps * eps.exp_m1();
    let delta_total = entries.iter().map(|e| e.delta).sum::<f64>() + delta_prime;
    Ok((eps_total, delta_total))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_budget() {
        let mut l = PrivacyLedger::new();
        l.record_repeated("exp", 0.0, 0.0, 50);
        let (e, d) = l.compose_adaptive(0.01).unwrap();
        assert_eq!(e, 0.0);
        assert!((d - 0.01).abs() < 1e-15);
    }

    #[test]
    fn single_entry_advanced() {
        let mut l = PrivacyLedger::new();
        l.record("exp", 0.1, 0.0);
        let (e, d) = l.compose_adaptive(0.01).unwrap();
        let expected = 0.1 * (2.0 * (100f64).ln()).sqrt() + 0.1 * ((0.1f64).exp() - 1.0);
        assert!((e - expected).abs() < 1e-15);
        assert!((d - 0.01).abs() < 1e-15);
    }

    #[test]
    fn heterogeneous_sums() {
        let mut l = PrivacyLedger::new();
        l.record("a", 0.1, 0.0);
        l.record("b", 0.2, 0.0);
        let (e, d) = l.compose_adaptive(0.5).unwrap();
        assert!((e - 0.3).abs() < 1e-15);
        assert_eq!(d, 0.0);
    }

    #[test]
    fn delta_prime_range() {
        let l = PrivacyLedger::new();
        assert!(l.compose_adaptive(0.0).is_err());
        assert!(l.compose_adaptive(1.0).is_err());
        assert_eq!(l.compose_adaptive(0.3).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn totals_monotone_in_entries() {
        let mut l = PrivacyLedger::new();
        let mut last = 0.0;
        for _ in 0..20 {
            l.record("x", 0.05, 1e-6);
            let (e, _) = l.compose_adaptive(1e-3).unwrap();
            assert!(e >= last);
            last = e;
        }
    }
}
