//! Feasibility LPs over products of restricted simplices: the distributed
//! multiplicative-weights solver and an exact minimax oracle.

mod distmw;
mod minimax;

use serde::{Deserialize, Serialize};

pub use distmw::{
    distmw_solve, distmw_target_accuracy, replay_player, DistMwOutput, DistMwParams, DistMwTranscript, NoRegretCheck,
    PlayerMw, MAX_ROUNDS,
};
pub use minimax::{exact_lp_min, min_max_violation, query_lp, MinimaxSolution};

use crate::dp::{exponential_mechanism, NoiseSource, ScoredOutcomeSet};
use crate::error::{Error, Result};
use crate::game::MixedProfile;

/// γ⟨coef, p⟩ ≤ bound, with `coef[i][j]` in [−1, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossConstraint {
    pub coef: Vec<Vec<f64>>,
    pub bound: f64,
}

/// Cross-agent linear constraints plus, for each player, the set of actions
/// she may put mass on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityLP {
    pub n: usize,
    pub m: usize,
    pub gamma: f64,
    pub constraints: Vec<CrossConstraint>,
    pub supports: Vec<Vec<usize>>,
}

impl FeasibilityLP {
    pub fn new(
        n: usize,
        m: usize,
        gamma: f64,
        constraints: Vec<CrossConstraint>,
        supports: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let lp = FeasibilityLP { n, m, gamma, constraints, supports };
        lp.validate()?;
        Ok(lp)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::param("LP needs at least one player and one action"));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::param(format!("γ must be positive, got {}", self.gamma)));
        }
        if self.supports.len() != self.n {
            return Err(Error::param("one support set per player"));
        }
        for (i, r) in self.supports.iter().enumerate() {
            if r.is_empty() {
                return Err(Error::param(format!("player {i} has an empty support")));
            }
            if r.windows(2).any(|w| w[0] >= w[1]) || r.iter().any(|&j| j >= self.m) {
                return Err(Error::param(format!(
                    "player {i}: support must be strictly increasing action indices below {}",
                    self.m
                )));
            }
        }
        for (c, con) in self.constraints.iter().enumerate() {
            if con.coef.len() != self.n || con.coef.iter().any(|row| row.len() != self.m) {
                return Err(Error::param(format!("constraint {c} has the wrong shape")));
            }
            if con.coef.iter().flatten().any(|v| !(v.abs() <= 1.0)) {
                return Err(Error::param(format!("constraint {c}: coefficients must lie in [-1,1]")));
            }
            if con.bound.is_nan() {
                return Err(Error::param(format!("constraint {c}: bound is NaN")));
            }
        }
        Ok(())
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// γ⟨coef, p⟩ − bound: positive means violated.
    pub fn violation(&self, c: usize, p: &MixedProfile) -> f64 {
        let con = &self.constraints[c];
        let dot: f64 =
            con.coef.iter().zip(p.rows()).map(|(f, q)| f.iter().zip(q).map(|(a, b)| a * b).sum::<f64>()).sum();
        self.gamma * dot - con.bound
    }

    pub fn violations(&self, p: &MixedProfile) -> Vec<f64> {
        (0..self.constraints.len()).map(|c| self.violation(c, p)).collect()
    }

    /// Largest violation; −∞ for an LP without cross constraints.
    pub fn max_violation(&self, p: &MixedProfile) -> f64 {
        self.violations(p).into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    /// True when `p` puts exactly zero mass outside every support.
    pub fn supports_respected(&self, p: &MixedProfile) -> bool {
        p.n() == self.n
            && p.rows().iter().zip(&self.supports).all(|(row, r)| {
                row.len() == self.m && row.iter().enumerate().all(|(j, &v)| v == 0.0 || r.binary_search(&j).is_ok())
            })
    }

    /// Uniform distribution over each player's support.
    pub fn uniform_on_supports(&self) -> MixedProfile {
        let rows = self
            .supports
            .iter()
            .map(|r| {
                let mut row = vec![0.0; self.m];
                let w = 1.0 / r.len() as f64;
                for &j in r {
                    row[j] = w;
                }
                row
            })
            .collect();
        MixedProfile::new(rows).expect("uniform rows sum to one")
    }
}

/// Multiplicative reweighting p_j·exp(−η f_j), left unnormalised.
pub fn mw_update(p: &[f64], loss: &[f64], eta: f64) -> Vec<f64> {
    p.iter().zip(loss).map(|(w, f)| w * (-eta * f).exp()).collect()
}

/// Relative-entropy projection onto the simplex restricted to `support`:
/// zero outside, proportional to the weights inside.
pub fn kl_project(weights: &[f64], support: &[usize]) -> Result<Vec<f64>> {
    let total: f64 = support.iter().map(|&j| weights[j]).sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Degenerate("no positive weight inside the support".to_string()));
    }
    let mut out = vec![0.0; weights.len()];
    for &j in support {
        out[j] = weights[j] / total;
    }
    Ok(out)
}

/// How the per-round constraint is picked.
pub enum ConstraintSelector<'a> {
    /// Largest violation, lowest index on ties.
    Exact,
    /// Exponential mechanism with score sensitivity γ.
    Exponential { epsilon: f64, src: &'a mut NoiseSource },
}

pub fn most_violated(lp: &FeasibilityLP, p: &MixedProfile, selector: ConstraintSelector<'_>) -> Result<usize> {
    if lp.constraints.is_empty() {
        return Err(Error::param("LP has no cross constraints to select from"));
    }
    let scores = lp.violations(p);
    match selector {
        ConstraintSelector::Exact => {
            let mut best = 0;
            for c in 1..scores.len() {
                if scores[c] > scores[best] {
                    best = c;
                }
            }
            Ok(best)
        }
        ConstraintSelector::Exponential { epsilon, src } => {
            let set = ScoredOutcomeSet::indexed(scores, lp.gamma)?;
            exponential_mechanism(&set, epsilon, src)
        }
    }
}
