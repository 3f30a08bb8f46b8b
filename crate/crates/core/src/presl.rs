//! Equilibrium selection by grid search over promised aggregator values:
//! the private two-stage mechanism (sparse vector over LP values, then the
//! distributed MW solver) and its non-private counterpart.

use serde::{Deserialize, Serialize};

use crate::dp::{NoiseSource, PrivacyLedger, SparseAnswer, SparseSession};
use crate::error::{Error, Result};
use crate::game::{sample_action, sample_profile_seeded, AggregativeGame, MixedProfile, PlayerType};
use crate::lp::{
    distmw_solve, min_max_violation, query_lp, replay_player, DistMwParams, DistMwTranscript, MinimaxSolution,
};
use crate::util::{grid_half_count, ln_plus};
use crate::Outcome;

/// Default cap on |X|·|Y| grid points.
pub const DEFAULT_GRID_BUDGET: u64 = 10_000_000;

/// γ√(8n ln(2mn)): every γ-aggregative game has a pure equilibrium this good.
pub fn existence_bound(n: usize, m: usize, gamma: f64) -> f64 {
    let n = n as f64;
    gamma * (8.0 * n * (2.0 * m as f64 * n).ln()).sqrt()
}

/// Rounding error √(nγ²/2 · ln((2d+2)/β)) of sampling a pure profile from a
/// mixed one, in both the aggregator and the loss.
pub fn rounding_error(n: usize, d: usize, gamma: f64, beta: f64) -> f64 {
    (n as f64 * gamma * gamma / 2.0 * ((2.0 * d as f64 + 2.0) / beta).ln()).sqrt()
}

/// Regular grid {−Kα, …, (K−1)α}^d of promised aggregators, where Kα is W
/// rounded up to a multiple of α.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregatorGrid {
    pub alpha: f64,
    pub half_count: i64,
    pub d: usize,
}

impl AggregatorGrid {
    pub fn new(w: f64, alpha: f64, d: usize) -> Self {
        AggregatorGrid { alpha, half_count: grid_half_count(w, alpha), d }
    }

    pub fn snapped_w(&self) -> f64 {
        self.half_count as f64 * self.alpha
    }

    pub fn per_axis(&self) -> usize {
        2 * self.half_count as usize
    }

    pub fn len(&self) -> u64 {
        (self.per_axis() as u64).saturating_pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Point number `idx` in lexicographic order (first coordinate slowest).
    pub fn point(&self, mut idx: u64) -> Vec<f64> {
        let per = self.per_axis() as u64;
        let mut out = vec![0.0; self.d];
        for k in (0..self.d).rev() {
            let digit = (idx % per) as i64;
            idx /= per;
            out[k] = (digit - self.half_count) as f64 * self.alpha;
        }
        out
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreslParams {
    pub zeta: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub beta: f64,
    pub e1: f64,
    pub e2: f64,
    pub alpha: f64,
    /// Slack of the aggregative-best-response supports.
    pub xi: f64,
    pub w: f64,
    pub grid: AggregatorGrid,
    /// Number of objective levels {0, α, …}.
    pub levels: u64,
    /// Additive accuracy of the stage-one LP values.
    pub lp_tol: f64,
    pub grid_budget: u64,
}

impl PreslParams {
    /// Accuracy terms at their derived values:
    /// E₁ = (100γ/ε)((d+1) ln(2W) ln n + ln(6/β)),
    /// E₂ = 100 (nγ²/ε · ln(3d/β) ln n √(ln m ln(1/δ)))^{1/2}, α = E₁ + E₂.
    pub fn derive(game: &AggregativeGame, zeta: f64, epsilon: f64, delta: f64, beta: f64) -> Result<Self> {
        check_privacy_args(epsilon, delta, beta)?;
        let (n, m, d, g) = (game.n() as f64, game.m() as f64, game.d() as f64, game.gamma());
        let e1 = 100.0 * g / epsilon * ((d + 1.0) * ln_plus(2.0 * game.w()) * ln_plus(n) + (6.0 / beta).ln());
        let e2 = 100.0
            * (n * g * g / epsilon * ln_plus(3.0 * d / beta) * ln_plus(n) * (ln_plus(m) * ln_plus(1.0 / delta)).sqrt())
                .sqrt();
        Self::assemble(game, zeta, epsilon, delta, beta, e1, e2)
    }

    /// Same parameters with a hand-picked resolution: α and E₁ are given and
    /// E₂ is whatever remains.
    pub fn with_resolution(
        game: &AggregativeGame,
        zeta: f64,
        epsilon: f64,
        delta: f64,
        beta: f64,
        alpha: f64,
        e1: f64,
    ) -> Result<Self> {
        check_privacy_args(epsilon, delta, beta)?;
        if !(alpha > 0.0) || !(e1 > 0.0) || e1 > alpha {
            return Err(Error::param(format!("need 0 < E₁ ≤ α, got E₁ = {e1}, α = {alpha}")));
        }
        Self::assemble(game, zeta, epsilon, delta, beta, e1, alpha - e1)
    }

    fn assemble(
        game: &AggregativeGame,
        zeta: f64,
        epsilon: f64,
        delta: f64,
        beta: f64,
        e1: f64,
        e2: f64,
    ) -> Result<Self> {
        let floor = existence_bound(game.n(), game.m(), game.gamma());
        if !(zeta >= floor * (1.0 - 1e-12)) {
            return Err(Error::param(format!("ζ = {zeta} is below the existence bound {floor}")));
        }
        let alpha = e1 + e2;
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::param(format!("resolution α = {alpha} is not positive")));
        }
        let grid = AggregatorGrid::new(game.w(), alpha, game.d());
        let levels = objective_levels(game, alpha);
        Ok(PreslParams {
            zeta,
            epsilon,
            delta,
            beta,
            e1,
            e2,
            alpha,
            xi: abr_slack(game, zeta, alpha),
            w: game.w(),
            grid,
            levels,
            lp_tol: alpha / 100.0,
            grid_budget: DEFAULT_GRID_BUDGET,
        })
    }

    pub fn query_count(&self) -> u64 {
        self.grid.len().saturating_mul(self.levels)
    }

    pub fn check_budget(&self) -> Result<()> {
        if self.query_count() > self.grid_budget {
            return Err(Error::Budget(format!(
                "{} grid points exceed the budget of {}",
                self.query_count(),
                self.grid_budget
            )));
        }
        Ok(())
    }

    /// Slack used for the second-stage LP: α + 2E₁, widened by the LP
    /// tolerance since stage one only sees a lower bound on each value.
    pub fn second_stage_slack(&self) -> f64 {
        self.alpha + 2.0 * self.e1 + self.lp_tol
    }

    pub fn threshold(&self) -> f64 {
        self.alpha + self.e1
    }

    pub fn regret_bound(&self) -> f64 {
        self.zeta + 12.0 * self.alpha
    }

    pub fn loss_slack(&self) -> f64 {
        5.0 * self.alpha
    }
}

fn check_privacy_args(epsilon: f64, delta: f64, beta: f64) -> Result<()> {
    if !(epsilon > 0.0) || !(delta > 0.0 && delta < 1.0) || !(beta > 0.0 && beta < 1.0) {
        return Err(Error::param(format!("need ε > 0 and δ, β ∈ (0,1); got {epsilon}, {delta}, {beta}")));
    }
    Ok(())
}

/// ζ + γ + 2α, with γ replaced by the realised influence spread when that
/// is larger so the optimal equilibrium stays inside the supports.
pub(crate) fn abr_slack(game: &AggregativeGame, zeta: f64, alpha: f64) -> f64 {
    zeta + game.gamma().max(game.gamma_eff()) + 2.0 * alpha
}

fn objective_levels(game: &AggregativeGame, alpha: f64) -> u64 {
    let top = game.n() as f64 * game.gamma();
    (top / alpha + 1e-9).floor() as u64 + 1
}

/// Stage-one enumeration: objective levels ascending, aggregator grid
/// lexicographic inside each level.
pub fn query_order(params: &PreslParams) -> impl Iterator<Item = (f64, Vec<f64>)> + '_ {
    (0..params.levels).flat_map(move |y| {
        let level = y as f64 * params.alpha;
        params.grid.points().map(move |s| (level, s))
    })
}

fn supports_at(game: &AggregativeGame, s: &[f64], xi: f64) -> Vec<Vec<usize>> {
    (0..game.n()).map(|i| game.abr_set(i, s, xi)).collect()
}

/// Q(ŝ, ŷ) at the stage-one tolerance.
pub fn query_value(game: &AggregativeGame, s_hat: &[f64], y_hat: f64, xi: f64, tol: f64) -> Result<MinimaxSolution> {
    crate::lp::exact_lp_min(game, s_hat, y_hat, xi, tol)
}

/// Everything a player needs, besides her own type, to recompute her
/// recommendation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreslTranscript {
    pub answers: Vec<SparseAnswer>,
    pub hit: Option<usize>,
    pub s_hat: Option<Vec<f64>>,
    pub y_hat: Option<f64>,
    pub xi: f64,
    pub slack: f64,
    pub distmw: Option<DistMwTranscript>,
    pub rounding_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreslOutput {
    pub outcome: Outcome,
    pub params: PreslParams,
    pub transcript: PreslTranscript,
    /// LP value at the hit, for spotting near-threshold selections.
    pub hit_value: Option<f64>,
    pub mixed: Option<MixedProfile>,
    pub distmw_violation: Option<f64>,
    pub ledger: PrivacyLedger,
}

/// The private selection mechanism. Returns `Outcome::Abort` when the sparse
/// vector never fires.
pub fn presl(game: &AggregativeGame, params: &PreslParams, src: &mut NoiseSource) -> Result<PreslOutput> {
    params.check_budget()?;
    let mut ledger = PrivacyLedger::new();
    ledger.record("sparse vector over LP values", params.epsilon, 0.0);
    let mut session = SparseSession::new(game.gamma(), params.threshold(), 1, params.epsilon, src)?;
    let mut answers = Vec::new();
    let mut hit = None;
    for (idx, (y, s)) in query_order(params).enumerate() {
        let q = query_value(game, &s, y, params.xi, params.lp_tol)?;
        let a = session.answer(q.value, src)?;
        answers.push(a);
        if a.is_below() {
            hit = Some((idx, y, s, q.value));
            break;
        }
    }
    let mut transcript = PreslTranscript {
        answers,
        hit: None,
        s_hat: None,
        y_hat: None,
        xi: params.xi,
        slack: params.second_stage_slack(),
        distmw: None,
        rounding_seed: None,
    };
    let Some((idx, y, s, value)) = hit else {
        return Ok(PreslOutput {
            outcome: Outcome::Abort,
            params: params.clone(),
            transcript,
            hit_value: None,
            mixed: None,
            distmw_violation: None,
            ledger,
        });
    };
    let slack = params.second_stage_slack();
    let lp = query_lp(game, &s, Some(y), slack, slack, supports_at(game, &s, params.xi))?;
    let mw = DistMwParams::derive(
        game.n(),
        game.m(),
        game.gamma(),
        params.epsilon,
        params.delta,
        params.alpha,
        params.beta / 3.0,
    )?;
    ledger.record("distributed MW", params.epsilon, params.delta);
    let run = distmw_solve(&lp, &mw, src)?;
    let seed = src.child_seed();
    let x = sample_profile_seeded(&run.profile, seed);
    transcript.hit = Some(idx);
    transcript.s_hat = Some(s);
    transcript.y_hat = Some(y);
    transcript.distmw = Some(run.transcript);
    transcript.rounding_seed = Some(seed);
    Ok(PreslOutput {
        outcome: Outcome::Profile(x),
        params: params.clone(),
        transcript,
        hit_value: Some(value),
        mixed: Some(run.profile),
        distmw_violation: Some(run.max_violation),
        ledger,
    })
}

/// Player `i`'s recommended action recomputed from the public transcript and
/// her own type alone; `None` when the run aborted.
pub fn replay_presl_player(transcript: &PreslTranscript, player: &PlayerType, i: usize) -> Result<Option<usize>> {
    let (Some(s), Some(mw), Some(seed)) =
        (transcript.s_hat.as_ref(), transcript.distmw.as_ref(), transcript.rounding_seed)
    else {
        return Ok(None);
    };
    let m = player.num_actions();
    let support = player.abr_set(s, transcript.xi);
    // same row order as the LP: +f^k, −f^k for each coordinate, then loss
    let mut rows = Vec::with_capacity(2 * s.len() + 1);
    for k in 0..s.len() {
        let up = player.influence[k].clone();
        let down = up.iter().map(|v| -v).collect();
        rows.push(up);
        rows.push(down);
    }
    rows.push(player.loss.clone().unwrap_or_else(|| vec![0.0; m]));
    let row = replay_player(mw, &rows, &support, m)?;
    Ok(Some(sample_action(&row, seed, i)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NpreslOutput {
    pub profile: crate::PureProfile,
    pub s_hat: Vec<f64>,
    /// Smallest feasible objective level found by bisection.
    pub objective: f64,
    pub mixed: MixedProfile,
    pub alpha: f64,
    pub xi: f64,
    pub rounding_error: f64,
    /// ζ + 4α + 2γ_eff + 2E.
    pub regret_bound: f64,
}

fn feasible(
    game: &AggregativeGame,
    s: &[f64],
    y: Option<f64>,
    alpha: f64,
    supports: &[Vec<usize>],
    tol: f64,
) -> Result<Option<MinimaxSolution>> {
    let lp = query_lp(game, s, y, alpha, 0.0, supports.to_vec())?;
    let sol = min_max_violation(&lp, tol)?;
    Ok((sol.upper <= tol).then_some(sol))
}

/// Non-private selection: for every grid aggregator, minimise the expected
/// loss subject to |S(p) − ŝ| ≤ α over the ξ-best-response supports
/// (bisection on the loss level to α/10), keep the best, and round.
pub fn npresl(game: &AggregativeGame, zeta: f64, alpha: f64, beta: f64, src: &mut NoiseSource) -> Result<NpreslOutput> {
    if !(alpha > 0.0) || !(beta > 0.0 && beta < 1.0) || !(zeta >= 0.0) {
        return Err(Error::param(format!("need α > 0, β ∈ (0,1), ζ ≥ 0; got {alpha}, {beta}, {zeta}")));
    }
    let grid = AggregatorGrid::new(game.w(), alpha, game.d());
    if grid.len() > DEFAULT_GRID_BUDGET {
        return Err(Error::Budget(format!("{} grid points exceed the budget", grid.len())));
    }
    let xi = abr_slack(game, zeta, alpha);
    let tol = alpha / 100.0;
    let resolution = alpha / 10.0;
    let top = game.n() as f64 * game.gamma();
    let mut best: Option<(f64, Vec<f64>, MinimaxSolution)> = None;
    let mut infeasible = 0usize;
    for s in grid.points() {
        let supports = supports_at(game, &s, xi);
        let Some(mut witness) = feasible(game, &s, None, alpha, &supports, tol)? else {
            infeasible += 1;
            continue;
        };
        let level = if !game.has_loss() {
            0.0
        } else if let Some(sol) = feasible(game, &s, Some(0.0), alpha, &supports, tol)? {
            witness = sol;
            0.0
        } else {
            let (mut lo, mut hi) = (0.0, top);
            if let Some(sol) = feasible(game, &s, Some(hi), alpha, &supports, tol)? {
                witness = sol;
            }
            while hi - lo > resolution {
                let mid = 0.5 * (lo + hi);
                match feasible(game, &s, Some(mid), alpha, &supports, tol)? {
                    Some(sol) => {
                        hi = mid;
                        witness = sol;
                    }
                    None => lo = mid,
                }
            }
            hi
        };
        if best.as_ref().is_none_or(|(b, _, _)| level < *b) {
            best = Some((level, s, witness));
        }
    }
    let Some((objective, s_hat, sol)) = best else {
        return Err(Error::Internal(format!(
            "no feasible aggregator among {infeasible} grid points (α = {alpha}, ξ = {xi})"
        )));
    };
    let profile = sample_profile_seeded(&sol.witness, src.child_seed());
    let e = rounding_error(game.n(), game.d(), game.gamma(), beta);
    Ok(NpreslOutput {
        profile,
        s_hat,
        objective,
        mixed: sol.witness,
        alpha,
        xi,
        rounding_error: e,
        regret_bound: zeta + 4.0 * alpha + 2.0 * game.gamma_eff() + 2.0 * e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::PlayerUtility;

    fn constant_game(n: usize) -> AggregativeGame {
        let players = (0..n)
            .map(|_| {
                PlayerType::new(
                    PlayerUtility::Linear { constant: vec![0.1, 0.1], weights: vec![vec![0.0], vec![0.0]] },
                    vec![vec![1.0, 0.0]],
                )
                .with_loss(vec![0.0, 0.0])
            })
            .collect();
        AggregativeGame::new(1.0 / n as f64, 1.0, players).unwrap()
    }

    #[test]
    fn existence_bound_values() {
        assert!((existence_bound(1, 3, 0.5) - 0.5 * (8.0 * 6f64.ln()).sqrt()).abs() < 1e-15);
        assert_eq!(existence_bound(10, 2, 0.0), 0.0);
        let v = existence_bound(1000, 2, 1e-3);
        assert!((v - 1e-3 * (8000.0 * 4000f64.ln()).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn tiny_grid_order() {
        let g = constant_game(4);
        let mut p = PreslParams::with_resolution(&g, 10.0, 1.0, 0.1, 0.1, 1.0, 0.5).unwrap();
        p.grid = AggregatorGrid::new(1.0, 1.0, 1);
        let q: Vec<_> = query_order(&p).collect();
        assert_eq!(q.first().unwrap().0, 0.0);
        assert_eq!(q[0].1, vec![-1.0]);
        assert_eq!(q[1].1, vec![0.0]);
        assert_eq!(q.len() as u64, p.query_count());
        assert_eq!(p.levels, 2); // nγ = 1 → {0, 1}
    }

    #[test]
    fn query_count_closed_form() {
        let g = constant_game(5);
        let p = PreslParams::with_resolution(&g, 10.0, 1.0, 0.1, 0.1, 0.25, 0.1).unwrap();
        // (2W/α)^d · (⌊nγ/α⌋ + 1) = 8 · 5
        assert_eq!(p.query_count(), 40);
    }

    #[test]
    fn constant_game_presl_and_npresl() {
        let g = constant_game(6);
        let zeta = existence_bound(6, 2, g.gamma());
        let params = PreslParams::derive(&g, zeta, 1.0, 1.0 / 6.0, 0.05).unwrap();
        let out = presl(&g, &params, &mut NoiseSource::noise_off(1)).unwrap();
        let x = out.outcome.profile().unwrap();
        assert!(g.regret(x).unwrap().max <= params.regret_bound());
        assert_eq!(g.loss(x).unwrap(), 0.0);
        let np = npresl(&g, zeta, 0.2, 0.05, &mut NoiseSource::noise_off(1)).unwrap();
        assert_eq!(g.loss(&np.profile).unwrap(), 0.0);
        assert!(g.regret(&np.profile).unwrap().max <= np.regret_bound);
    }

    #[test]
    fn zeta_below_existence_rejected() {
        let g = constant_game(6);
        assert!(PreslParams::derive(&g, 0.01, 1.0, 0.1, 0.05).is_err());
    }

    #[test]
    fn presl_replay_matches() {
        let g = constant_game(5);
        let zeta = existence_bound(5, 2, g.gamma());
        let params = PreslParams::with_resolution(&g, zeta, 50.0, 0.2, 0.1, 0.3, 0.05).unwrap();
        let out = presl(&g, &params, &mut NoiseSource::noisy(4)).unwrap();
        if let Outcome::Profile(x) = &out.outcome {
            for i in 0..g.n() {
                let a = replay_presl_player(&out.transcript, g.player(i), i).unwrap();
                assert_eq!(a, Some(x[i]));
            }
        }
    }

    #[test]
    fn rounding_error_formula() {
        let e = rounding_error(100, 2, 0.01, 0.05);
        assert!((e - (100.0 * 1e-4 / 2.0 * (6.0f64 / 0.05).ln()).sqrt()).abs() < 1e-15);
    }
}
