use serde::{Deserialize, Serialize};

use super::{kl_project, most_violated, mw_update, ConstraintSelector, FeasibilityLP};
use crate::dp::NoiseSource;
use crate::error::{Error, Result};
use crate::game::MixedProfile;
use crate::util::ln_plus;

/// Refuse DistMW runs longer than this many rounds.
pub const MAX_ROUNDS: usize = 10_000_000;

/// Inputs (ε, δ, α, β) and the derived round count, per-round privacy and
/// learning rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistMwParams {
    pub epsilon: f64,
    pub delta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub rounds: usize,
    pub eps0: f64,
    pub eta: f64,
}

impl DistMwParams {
    /// T = ⌈16 n²γ² ln m / α²⌉ (at least 1), ε₀ = ε / (2√(2T ln(1/δ))),
    /// η = α / (4nγ).
    pub fn derive(n: usize, m: usize, gamma: f64, epsilon: f64, delta: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !(delta > 0.0 && delta < 1.0) || !(alpha > 0.0) || !(beta > 0.0 && beta < 1.0) {
            return Err(Error::param(format!(
                "DistMW needs ε > 0, δ ∈ (0,1), α > 0, β ∈ (0,1); got {epsilon}, {delta}, {alpha}, {beta}"
            )));
        }
        if n == 0 || m == 0 || !(gamma > 0.0) {
            return Err(Error::param("DistMW needs n, m ≥ 1 and γ > 0"));
        }
        let nf = n as f64;
        let raw = (16.0 * nf * nf * gamma * gamma * (m as f64).ln() / (alpha * alpha)).ceil();
        if raw > MAX_ROUNDS as f64 {
            return Err(Error::Budget(format!("DistMW would run {raw} rounds (limit {MAX_ROUNDS}); raise α")));
        }
        let rounds = (raw as usize).max(1);
        let eps0 = epsilon / (2.0 * (2.0 * rounds as f64 * (1.0 / delta).ln()).sqrt());
        let eta = alpha / (4.0 * nf * gamma);
        Ok(DistMwParams { epsilon, delta, alpha, beta, rounds, eps0, eta })
    }
}

/// α = 100 (nγ²/ε · ln(d/β) · ln n · √(ln m · ln(1/δ)))^{1/2}, the accuracy
/// DistMW is run at.
pub fn distmw_target_accuracy(n: usize, m: usize, d: usize, gamma: f64, epsilon: f64, delta: f64, beta: f64) -> f64 {
    let inner = n as f64 * gamma * gamma / epsilon
        * ln_plus(d as f64 / beta)
        * ln_plus(n as f64)
        * (ln_plus(m as f64) * ln_plus(1.0 / delta)).sqrt();
    100.0 * inner.sqrt()
}

/// One player's multiplicative-weights learner over her own support.
#[derive(Debug, Clone)]
pub struct PlayerMw {
    support: Vec<usize>,
    eta: f64,
    current: Vec<f64>,
    sum: Vec<f64>,
    realized: f64,
    cumulative: Vec<f64>,
    rounds: usize,
}

/// Post-hoc check of the per-player no-regret inequality (averages).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoRegretCheck {
    pub realized: f64,
    pub best_fixed: f64,
    pub slack: f64,
    pub holds: bool,
}

impl PlayerMw {
    /// Starts uniform over the support, so the support constraint holds
    /// from the first round.
    pub fn new(m: usize, support: Vec<usize>, eta: f64) -> Result<Self> {
        let current = kl_project(&vec![1.0; m], &support)?;
        Ok(PlayerMw { support, eta, current, sum: vec![0.0; m], realized: 0.0, cumulative: vec![0.0; m], rounds: 0 })
    }

    pub fn current(&self) -> &[f64] {
        &self.current
    }

    /// Records the current distribution, then reweights by `loss` and
    /// projects back onto the support.
    pub fn step(&mut self, loss: &[f64]) -> Result<()> {
        let mut dot = 0.0;
        for (j, &l) in loss.iter().enumerate().take(self.current.len()) {
            self.sum[j] += self.current[j];
            self.cumulative[j] += l;
            dot += l * self.current[j];
        }
        self.realized += dot;
        self.rounds += 1;
        self.current = kl_project(&mw_update(&self.current, loss, self.eta), &self.support)?;
        Ok(())
    }

    /// Average of the distributions played so far.
    pub fn average(&self) -> Vec<f64> {
        let total: f64 = self.sum.iter().sum();
        self.sum.iter().map(|v| v / total).collect()
    }

    pub fn no_regret(&self, m: usize) -> NoRegretCheck {
        let t = self.rounds.max(1) as f64;
        let best = self.support.iter().map(|&j| self.cumulative[j]).fold(f64::INFINITY, f64::min);
        let realized = self.realized / t;
        let best_fixed = best / t;
        let slack = self.eta + (m as f64).ln() / (t * self.eta);
        NoRegretCheck { realized, best_fixed, slack, holds: realized <= best_fixed + slack + 1e-8 }
    }
}

/// The public billboard of a DistMW run: which constraint was posted in
/// each round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistMwTranscript {
    pub rounds: usize,
    pub eta: f64,
    pub selected: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistMwOutput {
    pub profile: MixedProfile,
    pub transcript: DistMwTranscript,
    pub max_violation: f64,
    pub no_regret: Vec<NoRegretCheck>,
}

fn current_profile(players: &[PlayerMw]) -> Result<MixedProfile> {
    // rows are renormalised each round, so this only re-validates
    MixedProfile::new(players.iter().map(|p| p.current.clone()).collect())
}

#[cfg(feature = "parallel")]
fn step_all(players: &mut [PlayerMw], lp: &FeasibilityLP, c: usize) -> Result<()> {
    use rayon::prelude::*;
    let coef = &lp.constraints[c].coef;
    if lp.n * lp.m < 4096 {
        return players.iter_mut().zip(coef).try_for_each(|(p, row)| p.step(row));
    }
    players.par_iter_mut().zip(coef.par_iter()).try_for_each(|(p, row)| p.step(row))
}

#[cfg(not(feature = "parallel"))]
fn step_all(players: &mut [PlayerMw], lp: &FeasibilityLP, c: usize) -> Result<()> {
    let coef = &lp.constraints[c].coef;
    players.iter_mut().zip(coef).try_for_each(|(p, row)| p.step(row))
}

/// Runs T rounds of exponential-mechanism constraint selection followed by
/// per-player MW updates and returns the averaged profile. Feasibility of the
/// LP is the caller's business; the run always completes.
pub fn distmw_solve(lp: &FeasibilityLP, params: &DistMwParams, src: &mut NoiseSource) -> Result<DistMwOutput> {
    lp.validate()?;
    if lp.constraints.is_empty() {
        return Err(Error::param("DistMW needs at least one cross constraint"));
    }
    let mut players =
        lp.supports.iter().map(|r| PlayerMw::new(lp.m, r.clone(), params.eta)).collect::<Result<Vec<_>>>()?;
    let mut selected = Vec::with_capacity(params.rounds);
    for _ in 0..params.rounds {
        let p = current_profile(&players)?;
        let c = most_violated(lp, &p, ConstraintSelector::Exponential { epsilon: params.eps0, src })?;
        selected.push(c);
        step_all(&mut players, lp, c)?;
    }
    let profile = MixedProfile::new(players.iter().map(|p| p.average()).collect())?;
    let max_violation = lp.max_violation(&profile);
    let no_regret = players.iter().map(|p| p.no_regret(lp.m)).collect();
    Ok(DistMwOutput {
        profile,
        transcript: DistMwTranscript { rounds: params.rounds, eta: params.eta, selected },
        max_violation,
        no_regret,
    })
}

/// Recomputes one player's averaged distribution from the posted constraint
/// sequence and her own data: her coefficient row in every constraint and her
/// support.
pub fn replay_player(
    transcript: &DistMwTranscript,
    own_rows: &[Vec<f64>],
    support: &[usize],
    m: usize,
) -> Result<Vec<f64>> {
    let mut player = PlayerMw::new(m, support.to_vec(), transcript.eta)?;
    for &c in &transcript.selected {
        let row = own_rows
            .get(c)
            .ok_or_else(|| Error::param(format!("transcript names constraint {c} which does not exist")))?;
        player.step(row)?;
    }
    Ok(player.average())
}
