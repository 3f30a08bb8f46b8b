use serde::{Deserialize, Serialize};

use super::{psummnash::smooth_walk, Quality, QuasiAggregativeGame};
use crate::dp::{NoiseSource, PrivacyLedger, SparseAnswer, SparseSession};
use crate::error::{Error, Result};
use crate::game::PlayerType;
use crate::{Outcome, PureProfile};

/// 100γ(ln(2Wn) + ln(8/β))/ε.
pub fn selection_min_alpha(game: &QuasiAggregativeGame, epsilon: f64, beta: f64) -> f64 {
    let n = game.n() as f64;
    100.0 * game.gamma() * ((2.0 * game.w() * n).ln() + (8.0 / beta).ln()) / epsilon
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionParams {
    pub zeta: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Best-response slack ζ + γ + 2α (γ raised to the realised spread).
    pub xi: f64,
    /// Grid points sorted by quality, best first.
    pub ranked: Vec<f64>,
    pub quality: Quality,
}

impl SelectionParams {
    pub fn new(
        game: &QuasiAggregativeGame,
        quality: Quality,
        zeta: f64,
        epsilon: f64,
        alpha: f64,
        beta: f64,
    ) -> Result<Self> {
        quality.validate()?;
        if !(epsilon > 0.0) || !(beta > 0.0 && beta < 1.0) {
            return Err(Error::param(format!("need ε > 0 and β ∈ (0,1), got {epsilon}, {beta}")));
        }
        if !(zeta >= 4.0 * game.gamma() * (1.0 - 1e-12)) {
            return Err(Error::param(format!("ζ = {zeta} is below the existence bound 4γ = {}", 4.0 * game.gamma())));
        }
        let floor = selection_min_alpha(game, epsilon, beta);
        if !(alpha >= floor * (1.0 - 1e-12)) || !alpha.is_finite() {
            return Err(Error::param(format!("α = {alpha} is below the accuracy floor {floor}")));
        }
        let mut ranked = game.grid(alpha);
        ranked.sort_by(|a, b| quality.value(*b).total_cmp(&quality.value(*a)).then(a.total_cmp(b)));
        Ok(SelectionParams {
            zeta,
            epsilon,
            alpha,
            beta,
            xi: zeta + game.gamma().max(game.gamma_eff()) + 2.0 * alpha,
            ranked,
            quality,
        })
    }

    /// 10α + 3γ_eff + ζ.
    pub fn regret_bound(&self, game: &QuasiAggregativeGame) -> f64 {
        10.0 * self.alpha + 3.0 * game.gamma_eff() + self.zeta
    }

    /// 5αλ.
    pub fn quality_slack(&self) -> f64 {
        5.0 * self.alpha * self.quality.lipschitz()
    }
}

/// Optimistic and pessimistic profiles inside the ξ-best-response sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extremes {
    pub s_min: f64,
    pub s_max: f64,
    pub x_min: PureProfile,
    pub x_max: PureProfile,
}

fn extreme_action(player: &PlayerType, ranked: &[usize], s: f64, xi: f64, optimistic: bool) -> usize {
    let allowed = player.abr_set(&[s], xi);
    let pick = |a: &&usize| allowed.contains(a);
    // abr sets are never empty, so some ranked action qualifies
    if optimistic {
        *ranked.iter().find(pick).expect("nonempty abr set")
    } else {
        *ranked.iter().rev().find(pick).expect("nonempty abr set")
    }
}

pub fn s_extremes(game: &QuasiAggregativeGame, s: f64, xi: f64) -> Result<Extremes> {
    let order = game.order().ok_or_else(|| Error::param("selection needs a declared action order for every player"))?;
    let pick = |optimistic| {
        PureProfile(game.players().iter().zip(order).map(|(p, r)| extreme_action(p, r, s, xi, optimistic)).collect())
    };
    let (x_max, x_min) = (pick(true), pick(false));
    Ok(Extremes { s_max: game.aggregate(x_max.actions()), s_min: game.aggregate(x_min.actions()), x_min, x_max })
}

/// Which branch produced the released profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectedBy {
    Optimistic { rank: usize },
    Pessimistic { rank: usize },
    Walk { rank: usize, step: usize },
}

impl SelectedBy {
    pub fn rank(&self) -> usize {
        match *self {
            SelectedBy::Optimistic { rank } | SelectedBy::Pessimistic { rank } | SelectedBy::Walk { rank, .. } => rank,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTranscript {
    pub alpha: f64,
    pub xi: f64,
    pub ranked: Vec<f64>,
    pub optimistic_answers: Vec<SparseAnswer>,
    pub pessimistic_answers: Vec<SparseAnswer>,
    pub bracket_answers: Vec<SparseAnswer>,
    pub walk_answers: Vec<SparseAnswer>,
    pub selected: Option<SelectedBy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionOutput {
    pub outcome: Outcome,
    pub transcript: SelectionTranscript,
    /// Grid aggregator the released profile is associated with.
    pub associated: Option<f64>,
    /// 10α + 3γ_eff + ζ.
    pub regret_bound: f64,
    /// 4α + 3γ_eff + ζ, what the walk branch alone guarantees.
    pub walk_regret_bound: f64,
    pub quality_slack: f64,
    pub ledger: PrivacyLedger,
}

fn first_below(
    values: impl Iterator<Item = f64>,
    session: &mut SparseSession,
    answers: &mut Vec<SparseAnswer>,
    src: &mut NoiseSource,
) -> Result<Option<usize>> {
    for (k, q) in values.enumerate() {
        let a = session.answer(q, src)?;
        answers.push(a);
        if a.is_below() {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

/// Quality-ordered private selection with four sparse sessions at ε/4:
/// optimistic hit, pessimistic hit, bracketing hit, and a walk inside the
/// bracket. A later branch replaces the candidate only with a better-ranked
/// aggregator.
pub fn select_equilibrium(
    game: &QuasiAggregativeGame,
    params: &SelectionParams,
    src: &mut NoiseSource,
) -> Result<SelectionOutput> {
    let (alpha, xi, g) = (params.alpha, params.xi, game.gamma());
    let quarter = params.epsilon / 4.0;
    let extremes = params.ranked.iter().map(|&s| s_extremes(game, s, xi)).collect::<Result<Vec<_>>>()?;
    let ranked = &params.ranked;
    let mut ledger = PrivacyLedger::new();
    ledger.record_repeated("sparse vector (one quarter each)", quarter, 0.0, 4);
    let mut t = SelectionTranscript {
        alpha,
        xi,
        ranked: ranked.clone(),
        optimistic_answers: Vec::new(),
        pessimistic_answers: Vec::new(),
        bracket_answers: Vec::new(),
        walk_answers: Vec::new(),
        selected: None,
    };
    let mut chosen: Option<(SelectedBy, PureProfile)> = None;
    let improves = |chosen: &Option<(SelectedBy, PureProfile)>, rank: usize| {
        chosen.as_ref().is_none_or(|(by, _)| rank < by.rank())
    };

    let mut session = SparseSession::new(g, 3.0 * alpha, 1, quarter, src)?;
    let q = extremes.iter().zip(ranked).map(|(e, s)| (e.s_max - s).abs());
    if let Some(k) = first_below(q, &mut session, &mut t.optimistic_answers, src)? {
        chosen = Some((SelectedBy::Optimistic { rank: k }, extremes[k].x_max.clone()));
    }

    let mut session = SparseSession::new(g, 3.0 * alpha, 1, quarter, src)?;
    let q = extremes.iter().zip(ranked).map(|(e, s)| (e.s_min - s).abs());
    if let Some(k) = first_below(q, &mut session, &mut t.pessimistic_answers, src)? {
        if improves(&chosen, k) {
            chosen = Some((SelectedBy::Pessimistic { rank: k }, extremes[k].x_min.clone()));
        }
    }

    // two aggregator values enter each bracketing query
    let mut session = SparseSession::new(2.0 * g, -3.0 * alpha, 1, quarter, src)?;
    let q = extremes
        .iter()
        .zip(ranked)
        .map(|(e, s)| (e.s_min - s).min(0.0).max(-2.0 * alpha) + (s - e.s_max).min(0.0).max(-2.0 * alpha));
    if let Some(l) = first_below(q, &mut session, &mut t.bracket_answers, src)? {
        let walk = smooth_walk(&extremes[l].x_max, &extremes[l].x_min)?;
        let target = ranked[l];
        let mut session = SparseSession::new(g, alpha + g / 2.0, 1, quarter, src)?;
        let q = walk.iter().map(|x| (game.aggregate(x.actions()) - target).abs());
        if let Some(j) = first_below(q, &mut session, &mut t.walk_answers, src)? {
            if improves(&chosen, l) {
                chosen = Some((SelectedBy::Walk { rank: l, step: j }, walk[j].clone()));
            }
        }
    }

    t.selected = chosen.as_ref().map(|(by, _)| *by);
    let associated = t.selected.map(|by| ranked[by.rank()]);
    Ok(SelectionOutput {
        outcome: chosen.map_or(Outcome::Abort, |(_, x)| Outcome::Profile(x)),
        transcript: t,
        associated,
        regret_bound: params.regret_bound(game),
        walk_regret_bound: 4.0 * alpha + 3.0 * game.gamma_eff() + params.zeta,
        quality_slack: params.quality_slack(),
        ledger,
    })
}

/// Player `i`'s action from the transcript, her type and her own action
/// order.
pub fn replay_selection_player(
    transcript: &SelectionTranscript,
    player: &PlayerType,
    order: &[usize],
    i: usize,
) -> Option<usize> {
    let by = transcript.selected?;
    let s = transcript.ranked[by.rank()];
    let xi = transcript.xi;
    Some(match by {
        SelectedBy::Optimistic { .. } => extreme_action(player, order, s, xi, true),
        SelectedBy::Pessimistic { .. } => extreme_action(player, order, s, xi, false),
        SelectedBy::Walk { step, .. } => extreme_action(player, order, s, xi, i < step),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{AggregativeGame, PlayerUtility};
    use crate::onedim::make_optin_game;

    fn brute_range(game: &QuasiAggregativeGame, s: f64, xi: f64) -> (f64, f64) {
        let sets: Vec<Vec<usize>> = game.players().iter().map(|p| p.abr_set(&[s], xi)).collect();
        let mut idx = vec![0usize; game.n()];
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        loop {
            let x: Vec<usize> = idx.iter().zip(&sets).map(|(&j, set)| set[j]).collect();
            let v = game.aggregate(&x);
            lo = lo.min(v);
            hi = hi.max(v);
            let mut p = 0;
            loop {
                if p == idx.len() {
                    return (lo, hi);
                }
                idx[p] += 1;
                if idx[p] < sets[p].len() {
                    break;
                }
                idx[p] = 0;
                p += 1;
            }
        }
    }

    fn three_action_game() -> QuasiAggregativeGame {
        let players = (0..4)
            .map(|i| {
                let c = 0.1 * i as f64;
                PlayerType::new(
                    PlayerUtility::Linear {
                        constant: vec![0.0, c, 0.2],
                        weights: vec![vec![0.3], vec![-0.2], vec![0.1]],
                    },
                    vec![vec![0.5, -1.0, 0.25]],
                )
            })
            .collect();
        QuasiAggregativeGame::from_aggregative(AggregativeGame::new(0.25, 1.0, players).unwrap()).unwrap()
    }

    #[test]
    fn extremes_bracket_every_profile() {
        let g = three_action_game();
        for s in [-0.9, -0.3, 0.0, 0.4, 0.8] {
            for xi in [0.0, 0.05, 0.2, 2.0] {
                let e = s_extremes(&g, s, xi).unwrap();
                let (lo, hi) = brute_range(&g, s, xi);
                assert!((e.s_min - lo).abs() < 1e-12 && (e.s_max - hi).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn full_sets_give_global_extremes() {
        let g = three_action_game();
        let e = s_extremes(&g, 0.0, 10.0).unwrap();
        assert!((e.s_max - 0.5).abs() < 1e-12);
        assert!((e.s_min + 1.0).abs() < 1e-12);
        let tight = s_extremes(&g, 0.1, 0.0).unwrap();
        assert_eq!(tight.s_min, tight.s_max);
    }

    #[test]
    fn ranking_is_quality_then_position() {
        let g = make_optin_game(&[0.3; 4]).unwrap();
        let p = SelectionParams::new(&g, Quality::constant(1.0), 1.0, 1e4, 0.25, 0.1).unwrap();
        assert_eq!(p.ranked, vec![-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75]);
        let p = SelectionParams::new(&g, Quality::identity(), 1.0, 1e4, 0.25, 0.1).unwrap();
        assert!(p.ranked.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn missing_order_refused() {
        use crate::onedim::Evaluator;
        use std::sync::Arc;
        let eval: Evaluator = Arc::new(|x: &[usize]| x.iter().filter(|&&a| a == 0).count() as f64 / 2.0);
        let u = vec![PlayerUtility::Threshold { threshold: 0.5, slope: 1.0 }; 2];
        let g = QuasiAggregativeGame::general(0.5, 1.0, u, eval, None).unwrap();
        assert!(s_extremes(&g, 0.0, 0.1).is_err());
    }

    #[test]
    fn participation_maximised() {
        // two equilibria: everyone out (S = 0) and everyone in (S = 1)
        let g = make_optin_game(&[0.5; 6]).unwrap();
        let eps = 1e5;
        let alpha = selection_min_alpha(&g, eps, 0.05).max(0.05);
        let p = SelectionParams::new(&g, Quality::identity(), 4.0 / 6.0, eps, alpha, 0.05).unwrap();
        let out = select_equilibrium(&g, &p, &mut NoiseSource::noise_off(0)).unwrap();
        let x = out.outcome.profile().unwrap();
        assert!(g.aggregator(x).unwrap() >= 1.0 - 5.0 * alpha);
        assert!(g.regret(x).unwrap().max <= out.regret_bound);
        for i in 0..g.n() {
            let r = replay_selection_player(&out.transcript, g.player(i), &g.order().unwrap()[i], i);
            assert_eq!(r, Some(x[i]));
        }
    }
}
