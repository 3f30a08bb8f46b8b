use serde::{Deserialize, Serialize};

use super::QuasiAggregativeGame;
use crate::dp::{NoiseSource, PrivacyLedger, SparseAnswer, SparseSession};
use crate::error::{Error, Result};
use crate::game::PlayerType;
use crate::util::grid_half_count;
use crate::{Outcome, PureProfile};

/// Smallest α the accuracy argument supports:
/// 100γ(ln(2Wn) + ln(6/β))/ε.
pub fn psummnash_min_alpha(game: &QuasiAggregativeGame, epsilon: f64, beta: f64) -> f64 {
    let n = game.n() as f64;
    100.0 * game.gamma() * ((2.0 * game.w() * n).ln() + (6.0 / beta).ln()) / epsilon
}

/// Profiles x⁰ … xⁿ where the first `j` players take `hi` and the rest keep
/// `lo`. Consecutive profiles differ in exactly one player (or none where
/// `hi` and `lo` agree).
pub fn smooth_walk(hi: &PureProfile, lo: &PureProfile) -> Result<Vec<PureProfile>> {
    if hi.len() != lo.len() {
        return Err(Error::param(format!("walk endpoints have lengths {} and {}", hi.len(), lo.len())));
    }
    let n = hi.len();
    Ok((0..=n).map(|j| PureProfile((0..n).map(|i| if i < j { hi[i] } else { lo[i] }).collect())).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsummStage {
    /// Stage one found a grid point with V(kα) ≈ kα.
    FixedPoint,
    /// Stage two found a crossing and the walk found a profile near it.
    Walk,
    Abort,
}

/// Public record of one run: every sparse answer and the released indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsummTranscript {
    pub alpha: f64,
    pub half_count: i64,
    pub fixed_point_answers: Vec<SparseAnswer>,
    /// Grid index k of the stage-one hit.
    pub fixed_point: Option<i64>,
    pub crossing_answers: Vec<SparseAnswer>,
    /// Grid index l of the stage-two hit.
    pub crossing: Option<i64>,
    pub walk_answers: Vec<SparseAnswer>,
    /// Walk step j of the final hit.
    pub walk_step: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsummOutput {
    pub outcome: Outcome,
    pub stage: PsummStage,
    pub transcript: PsummTranscript,
    /// Kα, the half-width actually searched.
    pub w: f64,
    /// 10α + 2γ_eff.
    pub regret_bound: f64,
    /// Exact crossing query value at the stage-two hit.
    pub crossing_value: Option<f64>,
    /// (V((l−1)α), V(lα)) at the stage-two hit.
    pub bracket: Option<(f64, f64)>,
    pub ledger: PrivacyLedger,
}

fn crossing_query(alpha: f64, v_prev: f64, v_here: f64, s: f64) -> f64 {
    (s - v_prev).min(0.0).max(-2.0 * alpha) + (v_here - s).min(0.0).max(-3.0 * alpha)
}

/// Private fixed-point search. Stage one scans |V(kα) − kα| against 4α;
/// stage two looks for a downward crossing V((l−1)α) > lα > V(lα) and walks
/// between the two best-response profiles.
pub fn psummnash(
    game: &QuasiAggregativeGame,
    epsilon: f64,
    alpha: f64,
    beta: f64,
    src: &mut NoiseSource,
) -> Result<PsummOutput> {
    if !(epsilon > 0.0) || !(beta > 0.0 && beta < 1.0) {
        return Err(Error::param(format!("need ε > 0 and β ∈ (0,1), got {epsilon}, {beta}")));
    }
    let floor = psummnash_min_alpha(game, epsilon, beta);
    if !(alpha >= floor * (1.0 - 1e-12)) || !alpha.is_finite() {
        return Err(Error::param(format!("α = {alpha} is below the accuracy floor {floor}")));
    }
    let g = game.gamma();
    let third = epsilon / 3.0;
    let k_max = grid_half_count(game.w(), alpha);
    let point = |k: i64| k as f64 * alpha;
    let mut ledger = PrivacyLedger::new();
    ledger.record_repeated("sparse vector (one third each)", third, 0.0, 3);

    let mut transcript = PsummTranscript {
        alpha,
        half_count: k_max,
        fixed_point_answers: Vec::new(),
        fixed_point: None,
        crossing_answers: Vec::new(),
        crossing: None,
        walk_answers: Vec::new(),
        walk_step: None,
    };
    let mut finish = |outcome: Outcome, stage, transcript, crossing_value, bracket| PsummOutput {
        outcome,
        stage,
        transcript,
        w: k_max as f64 * alpha,
        regret_bound: 10.0 * alpha + 2.0 * game.gamma_eff(),
        crossing_value,
        bracket,
        ledger: std::mem::take(&mut ledger),
    };

    // V on the whole grid; each entry depends on every player's type
    let values: Vec<f64> = (-k_max..k_max).map(|k| game.value(point(k))).collect();
    let v = |k: i64| values[(k + k_max) as usize];

    let mut session = SparseSession::new(g, 4.0 * alpha, 1, third, src)?;
    for k in -k_max..k_max {
        let a = session.answer((v(k) - point(k)).abs(), src)?;
        transcript.fixed_point_answers.push(a);
        if a.is_below() {
            transcript.fixed_point = Some(k);
            let x = game.abr_profile(point(k));
            return Ok(finish(Outcome::Profile(x), PsummStage::FixedPoint, transcript, None, None));
        }
    }

    // two grid values enter each query, so one player moves it by up to 2γ
    let mut session = SparseSession::new(2.0 * g, -4.0 * alpha, 1, third, src)?;
    let mut crossing = None;
    for k in (-k_max + 1)..k_max {
        let q = crossing_query(alpha, v(k - 1), v(k), point(k));
        let a = session.answer(q, src)?;
        transcript.crossing_answers.push(a);
        if a.is_below() {
            crossing = Some((k, q));
            break;
        }
    }
    let Some((l, q_l)) = crossing else {
        return Ok(finish(Outcome::Abort, PsummStage::Abort, transcript, None, None));
    };
    transcript.crossing = Some(l);
    let bracket = Some((v(l - 1), v(l)));

    let hi = game.abr_profile(point(l));
    let lo = game.abr_profile(point(l - 1));
    let walk = smooth_walk(&hi, &lo)?;
    let mut session = SparseSession::new(g, alpha + g / 2.0, 1, third, src)?;
    for (j, x) in walk.into_iter().enumerate() {
        let a = session.answer((game.aggregate(x.actions()) - point(l)).abs(), src)?;
        transcript.walk_answers.push(a);
        if a.is_below() {
            transcript.walk_step = Some(j);
            return Ok(finish(Outcome::Profile(x), PsummStage::Walk, transcript, Some(q_l), bracket));
        }
    }
    Ok(finish(Outcome::Abort, PsummStage::Abort, transcript, Some(q_l), bracket))
}

/// Player `i`'s action from the public transcript and her own type.
pub fn replay_psummnash_player(transcript: &PsummTranscript, player: &PlayerType, i: usize) -> Option<usize> {
    let alpha = transcript.alpha;
    if let Some(k) = transcript.fixed_point {
        return Some(player.best_action(&[k as f64 * alpha]));
    }
    let (l, j) = (transcript.crossing?, transcript.walk_step?);
    let target = if i < j { l } else { l - 1 };
    Some(player.best_action(&[target as f64 * alpha]))
}
