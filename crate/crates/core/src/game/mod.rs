//! Multi-dimensional aggregative games with a linear aggregator
//! S_k(x) = γ Σ_i f_i^k(x_i).

mod io;
mod profile;
mod utility;

use serde::{Deserialize, Serialize};

pub use io::{GameFile, UtilitySpec};
pub use profile::{sample_action, sample_profile_seeded, MixedProfile, PureProfile, ROW_SUM_TOL};
pub use utility::{PlayerUtility, TableGrid, OPT_IN, OPT_OUT};

use crate::dp::NoiseSource;
use crate::error::{Error, Result};

/// Everything private about one player: how she values outcomes, how her
/// actions move the aggregator, and her contribution to the designer's loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerType {
    pub utility: PlayerUtility,
    /// `influence[k][j]`: effect of action `j` on coordinate `k`, in [−1, 1].
    pub influence: Vec<Vec<f64>>,
    /// Per-action loss in [0, 1].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss: Option<Vec<f64>>,
}

impl PlayerType {
    pub fn new(utility: PlayerUtility, influence: Vec<Vec<f64>>) -> Self {
        PlayerType { utility, influence, loss: None }
    }

    pub fn with_loss(mut self, loss: Vec<f64>) -> Self {
        self.loss = Some(loss);
        self
    }

    pub fn num_actions(&self) -> usize {
        self.utility.num_actions()
    }

    pub fn payoff(&self, action: usize, s: &[f64]) -> f64 {
        self.utility.value(action, s)
    }

    pub fn payoffs(&self, s: &[f64]) -> Vec<f64> {
        (0..self.num_actions()).map(|a| self.payoff(a, s)).collect()
    }

    /// Actions within `eta` of the best payoff against the promised
    /// aggregator `s`. Never empty.
    pub fn abr_set(&self, s: &[f64], eta: f64) -> Vec<usize> {
        let values = self.payoffs(s);
        let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        values.iter().enumerate().filter(|(_, &u)| u >= best - eta).map(|(a, _)| a).collect()
    }

    /// Exact best response to `s`, lowest index on ties.
    pub fn best_action(&self, s: &[f64]) -> usize {
        let values = self.payoffs(s);
        let mut best = 0;
        for a in 1..values.len() {
            if values[a] > values[best] {
                best = a;
            }
        }
        best
    }

    /// How far `action` falls short of the best response to `s`.
    pub fn abr_gap(&self, action: usize, s: &[f64]) -> f64 {
        let values = self.payoffs(s);
        let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        best - values[action]
    }

    pub fn loss_of(&self, action: usize) -> f64 {
        self.loss.as_ref().map_or(0.0, |l| l[action])
    }
}

/// Per-player regret of a pure profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    pub per_player: Vec<f64>,
    pub max: f64,
}

impl RegretReport {
    fn from_vec(per_player: Vec<f64>) -> Self {
        let max = per_player.iter().cloned().fold(0.0, f64::max);
        RegretReport { per_player, max }
    }
}

/// Outcome of checking the three best-response translation inequalities on
/// one profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationReport {
    pub eta: f64,
    pub gamma_eff: f64,
    /// Best-response regret in the actual game.
    pub br_regret: Vec<f64>,
    /// Gap to the best response against the realised aggregator S(x).
    pub abr_regret: Vec<f64>,
    /// Gap to the best response against the shifted aggregator.
    pub shifted_abr_regret: Vec<f64>,
    pub shift: f64,
    pub br_to_abr_violations: usize,
    pub abr_to_br_violations: usize,
    pub shift_violations: usize,
    /// `eta`-Nash in the actual game.
    pub is_eta_nash: bool,
    /// Every player's action is an `eta`-ABR to S(x).
    pub is_eta_abr: bool,
}

impl TranslationReport {
    pub fn violations(&self) -> usize {
        self.br_to_abr_violations + self.abr_to_br_violations + self.shift_violations
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregativeGame {
    gamma: f64,
    w: f64,
    m: usize,
    d: usize,
    players: Vec<PlayerType>,
    gamma_eff: f64,
}

impl AggregativeGame {
    pub fn new(gamma: f64, w: f64, players: Vec<PlayerType>) -> Result<Self> {
        if players.is_empty() {
            return Err(Error::invalid("a game needs at least one player"));
        }
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::invalid(format!("γ must be positive and finite, got {gamma}")));
        }
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::invalid(format!("W must be positive and finite, got {w}")));
        }
        let m = players[0].num_actions();
        let d = players[0].influence.len();
        if m == 0 || d == 0 {
            return Err(Error::invalid("need at least one action and one aggregator coordinate"));
        }
        let with_loss = players[0].loss.is_some();
        let mut spread: f64 = 0.0;
        let mut reach = vec![0.0; d];
        for (i, p) in players.iter().enumerate() {
            if p.influence.len() != d {
                return Err(Error::invalid(format!("player {i}: influence has wrong dimension")));
            }
            for (k, row) in p.influence.iter().enumerate() {
                if row.len() != m {
                    return Err(Error::invalid(format!(
                        "player {i}: influence row {k} has {} entries, expected {m}",
                        row.len()
                    )));
                }
                if row.iter().any(|v| !(v.abs() <= 1.0)) {
                    return Err(Error::invalid(format!("player {i}: influence entries must lie in [-1,1]")));
                }
                let hi = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lo = row.iter().cloned().fold(f64::INFINITY, f64::min);
                spread = spread.max(hi - lo);
                reach[k] += row.iter().map(|v| v.abs()).fold(0.0, f64::max);
            }
            p.utility.validate(m, d, w).map_err(|e| Error::invalid(format!("player {i}: {e}")))?;
            match (&p.loss, with_loss) {
                (Some(l), true) => {
                    if l.len() != m || l.iter().any(|v| !(0.0..=1.0).contains(v)) {
                        return Err(Error::invalid(format!("player {i}: loss must have {m} entries in [0,1]")));
                    }
                }
                (None, false) => {}
                _ => return Err(Error::invalid("either every player has a loss table or none does")),
            }
        }
        for (k, r) in reach.iter().enumerate() {
            if gamma * r > w * (1.0 + 1e-12) {
                return Err(Error::invalid(format!("coordinate {k} can reach {} which exceeds W = {w}", gamma * r)));
            }
        }
        Ok(AggregativeGame { gamma, w, m, d, players, gamma_eff: gamma * spread })
    }

    pub fn n(&self) -> usize {
        self.players.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    /// Largest change in any aggregator coordinate a single player can cause.
    pub fn gamma_eff(&self) -> f64 {
        self.gamma_eff
    }

    pub fn players(&self) -> &[PlayerType] {
        &self.players
    }

    pub fn player(&self, i: usize) -> &PlayerType {
        &self.players[i]
    }

    pub fn has_loss(&self) -> bool {
        self.players[0].loss.is_some()
    }

    /// Same game with player `i`'s type replaced (e.g. a misreport).
    pub fn with_player(&self, i: usize, player: PlayerType) -> Result<Self> {
        if i >= self.n() {
            return Err(Error::param(format!("no player {i}")));
        }
        let mut players = self.players.clone();
        players[i] = player;
        AggregativeGame::new(self.gamma, self.w, players)
    }

    /// Soft checks on the influence scale; these never reject a game.
    pub fn parameter_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.gamma >= 1.0 {
            out.push(format!("γ = {} is not below 1", self.gamma));
        }
        if self.gamma * (self.n() as f64) < 1.0 - 1e-12 {
            out.push(format!("γ = {} is below 1/n; players barely move the aggregator", self.gamma));
        }
        out
    }

    pub fn aggregator(&self, x: &PureProfile) -> Result<Vec<f64>> {
        x.validate(self.n(), self.m)?;
        Ok(self.aggregator_unchecked(x.actions()))
    }

    pub(crate) fn aggregator_unchecked(&self, x: &[usize]) -> Vec<f64> {
        let mut s = vec![0.0; self.d];
        for (p, &a) in self.players.iter().zip(x) {
            for (k, sk) in s.iter_mut().enumerate() {
                *sk += p.influence[k][a];
            }
        }
        s.iter_mut().for_each(|v| *v *= self.gamma);
        s
    }

    pub fn expected_aggregator(&self, p: &MixedProfile) -> Result<Vec<f64>> {
        p.validate_shape(self.n(), self.m)?;
        let mut s = vec![0.0; self.d];
        for (pl, row) in self.players.iter().zip(p.rows()) {
            for (k, sk) in s.iter_mut().enumerate() {
                *sk += pl.influence[k].iter().zip(row).map(|(f, q)| f * q).sum::<f64>();
            }
        }
        s.iter_mut().for_each(|v| *v *= self.gamma);
        Ok(s)
    }

    pub fn utility(&self, i: usize, action: usize, s: &[f64]) -> f64 {
        self.players[i].payoff(action, s)
    }

    pub fn abr_set(&self, i: usize, s: &[f64], eta: f64) -> Vec<usize> {
        self.players[i].abr_set(s, eta)
    }

    /// Every player's exact best response to `s` (lowest index on ties).
    pub fn abr_profile(&self, s: &[f64]) -> PureProfile {
        PureProfile(self.players.iter().map(|p| p.best_action(s)).collect())
    }

    /// Unilateral-deviation regret of every player.
    pub fn regret(&self, x: &PureProfile) -> Result<RegretReport> {
        x.validate(self.n(), self.m)?;
        let s = self.aggregator_unchecked(x.actions());
        let mut shifted = s.clone();
        let per_player = self
            .players
            .iter()
            .zip(x.actions())
            .map(|(p, &xi)| {
                let current = p.payoff(xi, &s);
                let mut best = current;
                for a in 0..self.m {
                    if a == xi {
                        continue;
                    }
                    for k in 0..self.d {
                        shifted[k] = s[k] + self.gamma * (p.influence[k][a] - p.influence[k][xi]);
                    }
                    best = best.max(p.payoff(a, &shifted));
                }
                best - current
            })
            .collect();
        Ok(RegretReport::from_vec(per_player))
    }

    /// Designer loss L(x) = γ Σ_i ℓ_i(x_i); zero for games without losses.
    pub fn loss(&self, x: &PureProfile) -> Result<f64> {
        x.validate(self.n(), self.m)?;
        Ok(self.gamma * self.players.iter().zip(x.actions()).map(|(p, &a)| p.loss_of(a)).sum::<f64>())
    }

    pub fn expected_loss(&self, p: &MixedProfile) -> Result<f64> {
        p.validate_shape(self.n(), self.m)?;
        if !self.has_loss() {
            return Ok(0.0);
        }
        Ok(self.gamma
            * self
                .players
                .iter()
                .zip(p.rows())
                .map(|(pl, row)| {
                    let l = pl.loss.as_ref().expect("loss presence checked");
                    l.iter().zip(row).map(|(a, b)| a * b).sum::<f64>()
                })
                .sum::<f64>())
    }

    /// Independent per-player rounding, drawing the rounding seed from `src`.
    pub fn sample_profile(&self, p: &MixedProfile, src: &mut NoiseSource) -> Result<PureProfile> {
        p.validate_shape(self.n(), self.m)?;
        Ok(sample_profile_seeded(p, src.child_seed()))
    }

    /// Checks, player by player:
    /// ABR gap at S(x) ≤ BR regret + γ_eff, BR regret ≤ ABR gap + γ_eff, and
    /// ABR gap at `shifted` ≤ ABR gap at S(x) + 2‖S(x) − shifted‖∞.
    pub fn translate_checks(&self, x: &PureProfile, eta: f64, shifted: &[f64], tol: f64) -> Result<TranslationReport> {
        if shifted.len() != self.d {
            return Err(Error::param("shifted aggregator has the wrong dimension"));
        }
        let br = self.regret(x)?.per_player;
        let s = self.aggregator_unchecked(x.actions());
        let shift = crate::util::max_abs_diff(&s, shifted);
        let abr: Vec<f64> = self.players.iter().zip(x.actions()).map(|(p, &a)| p.abr_gap(a, &s)).collect();
        let abr_shifted: Vec<f64> = self.players.iter().zip(x.actions()).map(|(p, &a)| p.abr_gap(a, shifted)).collect();
        let g = self.gamma_eff;
        let count = |f: &dyn Fn(usize) -> bool| (0..self.n()).filter(|&i| !f(i)).count();
        Ok(TranslationReport {
            eta,
            gamma_eff: g,
            br_to_abr_violations: count(&|i| abr[i] <= br[i] + g + tol),
            abr_to_br_violations: count(&|i| br[i] <= abr[i] + g + tol),
            shift_violations: count(&|i| abr_shifted[i] <= abr[i] + 2.0 * shift + tol),
            is_eta_nash: br.iter().all(|&r| r <= eta),
            is_eta_abr: abr.iter().all(|&r| r <= eta),
            br_regret: br,
            abr_regret: abr,
            shifted_abr_regret: abr_shifted,
            shift,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_player(c: [f64; 2], w: [f64; 2], f: [f64; 2]) -> PlayerType {
        PlayerType::new(
            PlayerUtility::Linear { constant: c.to_vec(), weights: vec![vec![w[0]], vec![w[1]]] },
            vec![f.to_vec()],
        )
    }

    #[test]
    fn constant_influence_aggregator() {
        let players = (0..5).map(|_| linear_player([0.0, 0.0], [0.0, 0.0], [1.0, 1.0])).collect();
        let g = AggregativeGame::new(0.1, 0.5, players).unwrap();
        let s = g.aggregator(&PureProfile(vec![0, 1, 0, 1, 1])).unwrap();
        assert!((s[0] - 0.5).abs() < 1e-15);
        assert_eq!(g.gamma_eff(), 0.0);
    }

    #[test]
    fn constant_utilities_abr_everything() {
        let players = (0..3).map(|_| linear_player([0.2, 0.2], [0.0, 0.0], [1.0, -1.0])).collect();
        let g = AggregativeGame::new(0.2, 0.6, players).unwrap();
        assert_eq!(g.abr_set(0, &[0.1], 0.0), vec![0, 1]);
        assert_eq!(g.abr_profile(&[0.3]), PureProfile(vec![0, 0, 0]));
        assert!((g.gamma_eff() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn reach_beyond_w_rejected() {
        let players = (0..5).map(|_| linear_player([0.0, 0.0], [0.0, 0.0], [1.0, 0.0])).collect();
        assert!(matches!(AggregativeGame::new(0.1, 0.4, players), Err(Error::Validation(_))));
    }

    #[test]
    fn single_player_regret_is_gap() {
        let g = AggregativeGame::new(1.0, 1.0, vec![linear_player([0.1, 0.4], [0.0, 0.0], [0.0, 1.0])]).unwrap();
        let r = g.regret(&PureProfile(vec![0])).unwrap();
        assert!((r.max - 0.3).abs() < 1e-15);
        assert_eq!(g.regret(&PureProfile(vec![1])).unwrap().max, 0.0);
    }

    #[test]
    fn out_of_range_profile_errors() {
        let g = AggregativeGame::new(1.0, 1.0, vec![linear_player([0.1, 0.4], [0.0, 0.0], [0.0, 1.0])]).unwrap();
        assert!(g.aggregator(&PureProfile(vec![2])).is_err());
        assert!(g.aggregator(&PureProfile(vec![0, 0])).is_err());
    }

    #[test]
    fn expected_aggregator_cancels() {
        let players = (0..4).map(|_| linear_player([0.0, 0.0], [0.0, 0.0], [1.0, -1.0])).collect();
        let g = AggregativeGame::new(0.25, 1.0, players).unwrap();
        let s = g.expected_aggregator(&MixedProfile::uniform(4, 2)).unwrap();
        assert_eq!(s, vec![0.0]);
    }

    #[test]
    fn table_gap_example() {
        // two actions whose payoffs differ by 0.3 at s = 0
        let u = PlayerUtility::Table {
            grid: TableGrid { lo: -1.0, hi: 1.0, points: 3 },
            values: vec![vec![0.0, 0.5, 0.0], vec![0.0, 0.2, 0.0]],
        };
        let p = PlayerType::new(u, vec![vec![1.0, 0.0]]);
        assert_eq!(p.abr_set(&[0.0], 0.2), vec![0]);
        assert_eq!(p.abr_set(&[0.0], 0.4), vec![0, 1]);
    }
}
