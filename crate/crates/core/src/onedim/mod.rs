//! One-dimensional (quasi-)aggregative games: the private fixed-point search
//! over V(s) = S(BA(s)), the smooth walk between two best-response profiles,
//! and quality-ordered private equilibrium selection.

mod psummnash;
mod selection;

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use psummnash::{
    psummnash, psummnash_min_alpha, replay_psummnash_player, smooth_walk, PsummOutput, PsummStage, PsummTranscript,
};
pub use selection::{
    replay_selection_player, s_extremes, select_equilibrium, selection_min_alpha, Extremes, SelectedBy,
    SelectionOutput, SelectionParams, SelectionTranscript,
};

use crate::error::{Error, Result};
use crate::game::{AggregativeGame, PlayerType, PlayerUtility, RegretReport};
use crate::util::grid_half_count;
use crate::PureProfile;

/// Arbitrary aggregator over pure profiles.
pub type Evaluator = Arc<dyn Fn(&[usize]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Aggregator {
    /// S(x) = γ Σ f_i(x_i), delegated to the multi-dimensional game.
    Linear(AggregativeGame),
    General(Evaluator),
}

/// A game whose utilities depend on a player's own action and a scalar
/// aggregator S: Aⁿ → [−W, W] in which one player moves S by at most γ.
#[derive(Clone)]
pub struct QuasiAggregativeGame {
    gamma: f64,
    w: f64,
    m: usize,
    players: Vec<PlayerType>,
    aggregator: Aggregator,
    /// Per-player actions ranked from most to least aggregator-raising.
    order: Option<Vec<Vec<usize>>>,
}

impl fmt::Debug for QuasiAggregativeGame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuasiAggregativeGame")
            .field("n", &self.n())
            .field("m", &self.m)
            .field("gamma", &self.gamma)
            .field("w", &self.w)
            .field("linear", &self.is_linear())
            .field("ordered", &self.order.is_some())
            .finish()
    }
}

impl QuasiAggregativeGame {
    /// Wraps a one-dimensional linear aggregative game. Actions are ranked
    /// by influence, highest first, which satisfies the ordering assumption
    /// exactly.
    pub fn from_aggregative(game: AggregativeGame) -> Result<Self> {
        if game.d() != 1 {
            return Err(Error::param(format!("one-dimensional algorithms need d = 1, got d = {}", game.d())));
        }
        let order = game
            .players()
            .iter()
            .map(|p| {
                let f = &p.influence[0];
                let mut ranked: Vec<usize> = (0..f.len()).collect();
                ranked.sort_by(|&a, &b| f[b].total_cmp(&f[a]).then(a.cmp(&b)));
                ranked
            })
            .collect();
        Ok(QuasiAggregativeGame {
            gamma: game.gamma(),
            w: game.w(),
            m: game.m(),
            players: game.players().to_vec(),
            order: Some(order),
            aggregator: Aggregator::Linear(game),
        })
    }

    /// A game with an arbitrary evaluator and declared influence bound γ.
    /// Without `order`, selection is refused.
    pub fn general(
        gamma: f64,
        w: f64,
        utilities: Vec<PlayerUtility>,
        evaluator: Evaluator,
        order: Option<Vec<Vec<usize>>>,
    ) -> Result<Self> {
        if utilities.is_empty() {
            return Err(Error::invalid("a game needs at least one player"));
        }
        if !(gamma > 0.0 && gamma.is_finite()) || !(w > 0.0 && w.is_finite()) {
            return Err(Error::invalid(format!("need γ, W > 0, got {gamma}, {w}")));
        }
        let m = utilities[0].num_actions();
        for (i, u) in utilities.iter().enumerate() {
            u.validate(m, 1, w).map_err(|e| Error::invalid(format!("player {i}: {e}")))?;
        }
        if let Some(order) = &order {
            if order.len() != utilities.len() {
                return Err(Error::invalid("need one action order per player"));
            }
            for (i, ranked) in order.iter().enumerate() {
                let mut seen = vec![false; m];
                for &a in ranked {
                    if a >= m || std::mem::replace(&mut seen[a], true) {
                        return Err(Error::invalid(format!("player {i}: order is not a permutation")));
                    }
                }
                if ranked.len() != m {
                    return Err(Error::invalid(format!("player {i}: order is not a permutation")));
                }
            }
        }
        let players = utilities.into_iter().map(|u| PlayerType::new(u, vec![vec![0.0; m]])).collect();
        Ok(QuasiAggregativeGame { gamma, w, m, players, aggregator: Aggregator::General(evaluator), order })
    }

    pub fn n(&self) -> usize {
        self.players.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    /// Realised influence for linear games, the declared γ otherwise.
    pub fn gamma_eff(&self) -> f64 {
        match &self.aggregator {
            Aggregator::Linear(g) => g.gamma_eff(),
            Aggregator::General(_) => self.gamma,
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.aggregator, Aggregator::Linear(_))
    }

    pub fn as_aggregative(&self) -> Option<&AggregativeGame> {
        match &self.aggregator {
            Aggregator::Linear(g) => Some(g),
            Aggregator::General(_) => None,
        }
    }

    pub fn players(&self) -> &[PlayerType] {
        &self.players
    }

    pub fn player(&self, i: usize) -> &PlayerType {
        &self.players[i]
    }

    pub fn order(&self) -> Option<&[Vec<usize>]> {
        self.order.as_deref()
    }

    pub fn aggregate(&self, x: &[usize]) -> f64 {
        match &self.aggregator {
            Aggregator::Linear(g) => g.aggregator_unchecked(x)[0],
            Aggregator::General(eval) => eval(x),
        }
    }

    pub fn aggregator(&self, x: &PureProfile) -> Result<f64> {
        x.validate(self.n(), self.m)?;
        Ok(self.aggregate(x.actions()))
    }

    /// Every player's exact best response to `s`, lowest index on ties.
    pub fn abr_profile(&self, s: f64) -> PureProfile {
        PureProfile(self.players.iter().map(|p| p.best_action(&[s])).collect())
    }

    /// V(s): the aggregator reached when everyone best-responds to `s`.
    pub fn value(&self, s: f64) -> f64 {
        self.aggregate(self.abr_profile(s).actions())
    }

    pub fn regret(&self, x: &PureProfile) -> Result<RegretReport> {
        match &self.aggregator {
            Aggregator::Linear(g) => g.regret(x),
            Aggregator::General(eval) => {
                x.validate(self.n(), self.m)?;
                let mut y = x.actions().to_vec();
                let s = eval(&y);
                let mut per_player = Vec::with_capacity(self.n());
                for (i, p) in self.players.iter().enumerate() {
                    let own = y[i];
                    let current = p.payoff(own, &[s]);
                    let mut best = current;
                    for a in (0..self.m).filter(|&a| a != own) {
                        y[i] = a;
                        best = best.max(p.payoff(a, &[eval(&y)]));
                    }
                    y[i] = own;
                    per_player.push(best - current);
                }
                let max = per_player.iter().cloned().fold(0.0, f64::max);
                Ok(RegretReport { per_player, max })
            }
        }
    }

    /// Largest single-player change of S seen over `trials` random profiles.
    pub fn sampled_influence(&self, trials: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..trials {
            let mut x: Vec<usize> = (0..self.n()).map(|_| rng.gen_range(0..self.m)).collect();
            let i = rng.gen_range(0..self.n());
            let a = rng.gen_range(0..self.m);
            let before = self.aggregate(&x);
            x[i] = a;
            worst = worst.max((self.aggregate(&x) - before).abs());
        }
        worst
    }

    /// Sampled pairs where a preferred action lowers S; zero when the
    /// declared order is consistent.
    pub fn order_violations(&self, trials: usize, seed: u64) -> Result<usize> {
        let order = self.order.as_ref().ok_or_else(|| Error::param("no action order declared"))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut bad = 0;
        for _ in 0..trials {
            let mut x: Vec<usize> = (0..self.n()).map(|_| rng.gen_range(0..self.m)).collect();
            let i = rng.gen_range(0..self.n());
            let mut last = f64::INFINITY;
            for &a in &order[i] {
                x[i] = a;
                let s = self.aggregate(&x);
                if s > last + 1e-12 {
                    bad += 1;
                    break;
                }
                last = s;
            }
        }
        Ok(bad)
    }

    /// Grid {−Kα, …, (K−1)α} with Kα ≥ W.
    pub fn grid(&self, alpha: f64) -> Vec<f64> {
        let k = grid_half_count(self.w, alpha);
        (-k..k).map(|j| j as f64 * alpha).collect()
    }
}

/// Objective over aggregator values for equilibrium selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Quality {
    Linear {
        slope: f64,
        intercept: f64,
    },
    /// Piecewise-linear through `(s, q)` points sorted by `s`, flat outside.
    Table {
        points: Vec<[f64; 2]>,
    },
}

impl Quality {
    pub fn identity() -> Self {
        Quality::Linear { slope: 1.0, intercept: 0.0 }
    }

    pub fn constant(c: f64) -> Self {
        Quality::Linear { slope: 0.0, intercept: c }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Quality::Linear { slope, intercept } => {
                if !slope.is_finite() || !intercept.is_finite() {
                    return Err(Error::invalid("quality coefficients must be finite"));
                }
            }
            Quality::Table { points } => {
                if points.is_empty() {
                    return Err(Error::invalid("quality table is empty"));
                }
                if points.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("quality table has non-finite entries"));
                }
                if points.windows(2).any(|w| !(w[1][0] > w[0][0])) {
                    return Err(Error::invalid("quality table abscissae must be strictly increasing"));
                }
            }
        }
        Ok(())
    }

    pub fn value(&self, s: f64) -> f64 {
        match self {
            Quality::Linear { slope, intercept } => intercept + slope * s,
            Quality::Table { points } => {
                let first = points[0];
                let last = points[points.len() - 1];
                if s <= first[0] {
                    return first[1];
                }
                if s >= last[0] {
                    return last[1];
                }
                let j = points.partition_point(|p| p[0] <= s);
                let (a, b) = (points[j - 1], points[j]);
                let t = (s - a[0]) / (b[0] - a[0]);
                a[1] + t * (b[1] - a[1])
            }
        }
    }

    /// Lipschitz constant λ.
    pub fn lipschitz(&self) -> f64 {
        match self {
            Quality::Linear { slope, .. } => slope.abs(),
            Quality::Table { points } => {
                points.windows(2).map(|w| ((w[1][1] - w[0][1]) / (w[1][0] - w[0][0])).abs()).fold(0.0, f64::max)
            }
        }
    }
}

fn threshold_players(thresholds: &[f64]) -> Result<Vec<PlayerType>> {
    if thresholds.is_empty() {
        return Err(Error::param("need at least one threshold"));
    }
    thresholds
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::param(format!("threshold {i} = {t} lies outside [0, 1]")));
            }
            Ok(PlayerType::new(PlayerUtility::Threshold { threshold: t, slope: 1.0 }, vec![vec![1.0, 0.0]]))
        })
        .collect()
}

/// Participation game as an aggregative game: action 0 opts in, S is the
/// participating fraction, and opting in pays s − T_i.
pub fn optin_aggregative(thresholds: &[f64]) -> Result<AggregativeGame> {
    let players = threshold_players(thresholds)?;
    AggregativeGame::new(1.0 / players.len() as f64, 1.0, players)
}

pub fn make_optin_game(thresholds: &[f64]) -> Result<QuasiAggregativeGame> {
    QuasiAggregativeGame::from_aggregative(optin_aggregative(thresholds)?)
}
