//! Multi-commodity market with a hinge pricing rule.
//!
//! Each trader holds a unit position in {−1, 0, +1} for each of `d`
//! securities. Action `j` is read as `d` base-3 digits, least significant
//! first (digit `k` is security `k`), with digits 0, 1, 2 meaning short,
//! neutral and long.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{AggregativeGame, PlayerType, PlayerUtility, PureProfile};

/// Position of `action` in security `k`.
pub fn position(action: usize, k: usize) -> i64 {
    ((action / 3usize.pow(k as u32)) % 3) as i64 - 1
}

/// Full portfolio vector of an action index.
pub fn portfolio(action: usize, d: usize) -> Vec<i64> {
    (0..d).map(|k| position(action, k)).collect()
}

/// Inverse of [`portfolio`].
pub fn action_index(portfolio: &[i64]) -> Result<usize> {
    let mut j = 0;
    for (k, &v) in portfolio.iter().enumerate() {
        if !(-1..=1).contains(&v) {
            return Err(Error::param(format!("position {v} in security {k} is not -1, 0 or 1")));
        }
        j += (v + 1) as usize * 3usize.pow(k as u32);
    }
    Ok(j)
}

/// Index of the all-neutral portfolio.
pub fn neutral_action(d: usize) -> usize {
    (0..d).map(|k| 3usize.pow(k as u32)).sum()
}

/// Price of one security: 0 below −λ/2, I/λ + 1/2 in the band, 1 above λ/2.
pub fn hinge_price_scalar(imbalance: f64, lambda: f64) -> f64 {
    (imbalance / lambda + 0.5).clamp(0.0, 1.0)
}

pub fn hinge_price(imbalance: &[f64], lambda: f64) -> Vec<f64> {
    imbalance.iter().map(|&i| hinge_price_scalar(i, lambda)).collect()
}

/// Trader payoff (v − ⟨a, q(λs)⟩)/2d, where `s = I/λ`.
pub fn normalized_payoff(valuation: f64, action: usize, s: &[f64], lambda: f64) -> f64 {
    let d = s.len();
    let mut paid = 0.0;
    for (k, &sk) in s.iter().enumerate() {
        let a = position(action, k);
        if a != 0 {
            paid += a as f64 * hinge_price_scalar(lambda * sk, lambda);
        }
    }
    (valuation - paid) / (2.0 * d as f64)
}

/// Worst-case exposure of the market maker in one security.
pub fn security_loss(imbalance: f64, lambda: f64) -> f64 {
    let q = hinge_price_scalar(imbalance, lambda);
    if imbalance > 0.0 {
        imbalance * (1.0 - q)
    } else if imbalance < 0.0 {
        -imbalance * q
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MakerLoss {
    pub per_security: Vec<f64>,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketGame {
    pub n: usize,
    pub d: usize,
    pub lambda: f64,
    /// `valuations[i][j]` in [−d, d] over the 3^d portfolios.
    pub valuations: Vec<Vec<f64>>,
}

impl MarketGame {
    pub fn new(d: usize, lambda: f64, valuations: Vec<Vec<f64>>) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("a market needs at least one security"));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::invalid(format!("λ must be positive, got {lambda}")));
        }
        if valuations.is_empty() {
            return Err(Error::invalid("a market needs at least one trader"));
        }
        let m = 3usize.pow(d as u32);
        let bound = d as f64;
        for (i, v) in valuations.iter().enumerate() {
            if v.len() != m {
                return Err(Error::invalid(format!("trader {i}: {} valuations, expected 3^{d} = {m}", v.len())));
            }
            if v.iter().any(|x| !(x.abs() <= bound)) {
                return Err(Error::invalid(format!("trader {i}: valuations must lie in [-{d}, {d}]")));
            }
        }
        Ok(MarketGame { n: valuations.len(), d, lambda, valuations })
    }

    pub fn num_actions(&self) -> usize {
        3usize.pow(self.d as u32)
    }

    pub fn imbalance(&self, x: &PureProfile) -> Result<Vec<i64>> {
        x.validate(self.n, self.num_actions())?;
        let mut out = vec![0i64; self.d];
        for &a in x.actions() {
            for (k, o) in out.iter_mut().enumerate() {
                *o += position(a, k);
            }
        }
        Ok(out)
    }

    pub fn prices(&self, x: &PureProfile) -> Result<Vec<f64>> {
        let imb: Vec<f64> = self.imbalance(x)?.into_iter().map(|v| v as f64).collect();
        Ok(hinge_price(&imb, self.lambda))
    }

    pub fn trader_utility(&self, i: usize, action: usize, s: &[f64]) -> f64 {
        normalized_payoff(self.valuations[i][action], action, s, self.lambda)
    }

    pub fn market_maker_loss(&self, x: &PureProfile) -> Result<MakerLoss> {
        let per_security: Vec<f64> =
            self.imbalance(x)?.into_iter().map(|i| security_loss(i as f64, self.lambda)).collect();
        let total = per_security.iter().sum();
        Ok(MakerLoss { per_security, total })
    }

    /// Aggregator I/λ with declared influence γ = 1/λ and range W = n/λ.
    pub fn to_aggregative(&self) -> Result<AggregativeGame> {
        let m = self.num_actions();
        let influence: Vec<Vec<f64>> = (0..self.d).map(|k| (0..m).map(|j| position(j, k) as f64).collect()).collect();
        let players = self
            .valuations
            .iter()
            .map(|v| {
                PlayerType::new(PlayerUtility::Market { valuation: v.clone(), lambda: self.lambda }, influence.clone())
            })
            .collect();
        AggregativeGame::new(1.0 / self.lambda, self.n as f64 / self.lambda, players)
    }

    /// Random valuations that add up per-security values, each in [−1, 1],
    /// so the portfolio value stays in [−d, d].
    pub fn separable(n: usize, d: usize, lambda: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let m = 3usize.pow(d as u32);
        let valuations = (0..n)
            .map(|_| {
                let per: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                (0..m).map(|j| (0..d).map(|k| per[k] * position(j, k) as f64).sum()).collect()
            })
            .collect();
        MarketGame::new(d, lambda, valuations)
    }

    /// Unstructured valuations drawn uniformly from [−d, d].
    pub fn random_tables(n: usize, d: usize, lambda: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let m = 3usize.pow(d as u32);
        let bound = d as f64;
        let valuations = (0..n).map(|_| (0..m).map(|_| rng.gen_range(-bound..=bound)).collect()).collect();
        MarketGame::new(d, lambda, valuations)
    }
}

/// Comparator slack √(8 n d ln(3n))/λ used for the market instantiation.
pub fn market_zeta(n: usize, d: usize, lambda: f64) -> f64 {
    let n = n as f64;
    (8.0 * n * d as f64 * (3.0 * n).ln()).sqrt() / lambda
}

/// Truthfulness slack √d((n/λ²)^{1/3} + (n/λ²)^{1/2}) with the
/// polylogarithmic factor left out.
pub fn market_truthfulness_rate(n: usize, d: usize, lambda: f64) -> f64 {
    let r = n as f64 / (lambda * lambda);
    (d as f64).sqrt() * (r.cbrt() + r.sqrt())
}
