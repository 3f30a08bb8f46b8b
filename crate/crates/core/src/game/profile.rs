use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::mix_seed;

/// One action index per player.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PureProfile(pub Vec<usize>);

impl PureProfile {
    pub fn new(actions: Vec<usize>) -> Self {
        PureProfile(actions)
    }

    pub fn actions(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn validate(&self, n: usize, m: usize) -> Result<()> {
        if self.0.len() != n {
            return Err(Error::param(format!("profile has {} entries, game has {n} players", self.0.len())));
        }
        if let Some((i, a)) = self.0.iter().enumerate().find(|(_, &a)| a >= m) {
            return Err(Error::param(format!("player {i} plays action {a}, only {m} actions exist")));
        }
        Ok(())
    }
}

impl std::ops::Index<usize> for PureProfile {
    type Output = usize;
    fn index(&self, i: usize) -> &usize {
        &self.0[i]
    }
}

/// Tolerance on row sums of a mixed profile.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Product distribution: one probability row per player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct MixedProfile {
    rows: Vec<Vec<f64>>,
}

impl MixedProfile {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
                return Err(Error::param(format!("row {i} has a negative or non-finite entry")));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::param(format!("row {i} sums to {total}, not 1")));
            }
        }
        Ok(MixedProfile { rows })
    }

    /// Rescales every row to sum to one (rows must have positive mass).
    pub fn normalized(mut rows: Vec<Vec<f64>>) -> Result<Self> {
        for (i, row) in rows.iter_mut().enumerate() {
            let total: f64 = row.iter().sum();
            if !(total > 0.0) || !total.is_finite() {
                return Err(Error::Degenerate(format!("row {i} has no positive mass")));
            }
            for p in row.iter_mut() {
                *p /= total;
            }
        }
        Self::new(rows)
    }

    pub fn point_mass(x: &PureProfile, m: usize) -> Self {
        let rows =
            x.0.iter()
                .map(|&a| {
                    let mut row = vec![0.0; m];
                    row[a] = 1.0;
                    row
                })
                .collect();
        MixedProfile { rows }
    }

    pub fn uniform(n: usize, m: usize) -> Self {
        MixedProfile { rows: vec![vec![1.0 / m as f64; m]; n] }
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn validate_shape(&self, n: usize, m: usize) -> Result<()> {
        if self.rows.len() != n || self.rows.iter().any(|r| r.len() != m) {
            return Err(Error::param(format!("mixed profile shape does not match {n} players x {m} actions")));
        }
        Ok(())
    }
}

impl TryFrom<Vec<Vec<f64>>> for MixedProfile {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        MixedProfile::new(rows)
    }
}

impl From<MixedProfile> for Vec<Vec<f64>> {
    fn from(p: MixedProfile) -> Self {
        p.rows
    }
}

/// Draws player `i`'s action from `row` using a coin stream keyed by
/// `(seed, i)`, so each player can redo her own draw in isolation.
pub fn sample_action(row: &[f64], seed: u64, player: usize) -> usize {
    let mut rng = ChaCha20Rng::seed_from_u64(mix_seed(seed, player as u64));
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (j, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return j;
        }
    }
    row.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Independent per-player rounding of a mixed profile.
pub fn sample_profile_seeded(p: &MixedProfile, seed: u64) -> PureProfile {
    PureProfile(p.rows.iter().enumerate().map(|(i, row)| sample_action(row, seed, i)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_rows() {
        assert!(MixedProfile::new(vec![vec![0.5, 0.6]]).is_err());
        assert!(MixedProfile::new(vec![vec![-0.1, 1.1]]).is_err());
        assert!(MixedProfile::new(vec![vec![0.25, 0.75]]).is_ok());
    }

    #[test]
    fn point_mass_samples_deterministically() {
        let x = PureProfile(vec![2, 0, 1]);
        let p = MixedProfile::point_mass(&x, 3);
        for seed in 0..20 {
            assert_eq!(sample_profile_seeded(&p, seed), x);
        }
    }

    #[test]
    fn same_seed_same_profile() {
        let p = MixedProfile::uniform(50, 3);
        assert_eq!(sample_profile_seeded(&p, 9), sample_profile_seeded(&p, 9));
        assert_ne!(sample_profile_seeded(&p, 9), sample_profile_seeded(&p, 10));
    }

    #[test]
    fn serde_validates() {
        let bad: std::result::Result<MixedProfile, _> = serde_json::from_str("[[0.3,0.3]]");
        assert!(bad.is_err());
        let ok: MixedProfile = serde_json::from_str("[[0.5,0.5]]").unwrap();
        assert_eq!(ok.row(0), &[0.5, 0.5]);
    }
}
