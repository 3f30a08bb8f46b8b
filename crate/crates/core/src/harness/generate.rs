use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{AggregativeGame, PlayerType, PlayerUtility};
use crate::market::MarketGame;
use crate::onedim::optin_aggregative;

/// Random game families. All use γ = 1/n except markets, which use 1/λ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    Linear {
        n: usize,
        m: usize,
        d: usize,
        #[serde(default)]
        with_loss: bool,
    },
    /// Participation game with uniform thresholds in [0, 1].
    Threshold { n: usize },
    Market {
        n: usize,
        d: usize,
        lambda: f64,
        #[serde(default)]
        separable: bool,
    },
    /// d = m and f[k][j] = 1{j = k}: the aggregator is the action shares.
    Anonymous {
        n: usize,
        m: usize,
        #[serde(default)]
        with_loss: bool,
    },
}

fn random_linear_utility(rng: &mut ChaCha20Rng, m: usize, d: usize, w: f64) -> PlayerUtility {
    let mut constant = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    for _ in 0..m {
        let raw: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let norm: f64 = raw.iter().map(|v: &f64| v.abs()).sum();
        let target = rng.gen_range(0.0..=0.5) / w.max(1.0);
        let scale = if norm > 0.0 { target / norm } else { 0.0 };
        let row: Vec<f64> = raw.iter().map(|v| v * scale).collect();
        let room = 1.0 - target * w;
        constant.push(rng.gen_range(-room..=room));
        weights.push(row);
    }
    PlayerUtility::Linear { constant, weights }
}

fn check_size(n: usize, m: usize) -> Result<()> {
    if n == 0 || m < 2 {
        return Err(Error::param(format!("need n ≥ 1 and m ≥ 2, got n = {n}, m = {m}")));
    }
    Ok(())
}

/// Deterministic in `seed`; every emitted game passes the game validators.
pub fn generate(spec: &GeneratorSpec, seed: u64) -> Result<AggregativeGame> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    match *spec {
        GeneratorSpec::Linear { n, m, d, with_loss } => {
            check_size(n, m)?;
            if d == 0 {
                return Err(Error::param("need d ≥ 1"));
            }
            let players = (0..n)
                .map(|_| {
                    let f = (0..d).map(|_| (0..m).map(|_| rng.gen_range(-1.0..=1.0)).collect()).collect();
                    let p = PlayerType::new(random_linear_utility(&mut rng, m, d, 1.0), f);
                    if with_loss {
                        p.with_loss((0..m).map(|_| rng.gen_range(0.0..=1.0)).collect())
                    } else {
                        p
                    }
                })
                .collect();
            AggregativeGame::new(1.0 / n as f64, 1.0, players)
        }
        GeneratorSpec::Threshold { n } => {
            check_size(n, 2)?;
            let t: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect();
            optin_aggregative(&t)
        }
        GeneratorSpec::Market { n, d, lambda, separable } => {
            let market = if separable {
                MarketGame::separable(n, d, lambda, seed)?
            } else {
                MarketGame::random_tables(n, d, lambda, seed)?
            };
            market.to_aggregative()
        }
        GeneratorSpec::Anonymous { n, m, with_loss } => {
            check_size(n, m)?;
            let f: Vec<Vec<f64>> = (0..m).map(|k| (0..m).map(|j| if j == k { 1.0 } else { 0.0 }).collect()).collect();
            let players = (0..n)
                .map(|_| {
                    let p = PlayerType::new(random_linear_utility(&mut rng, m, m, 1.0), f.clone());
                    if with_loss {
                        p.with_loss((0..m).map(|_| rng.gen_range(0.0..=1.0)).collect())
                    } else {
                        p
                    }
                })
                .collect();
            AggregativeGame::new(1.0 / n as f64, 1.0, players)
        }
    }
}

/// Opt-in thresholds drawn the same way as the threshold generator.
pub fn random_thresholds(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::onedim::make_optin_game;
    use crate::PureProfile;

    #[test]
    fn deterministic_in_seed() {
        let spec = GeneratorSpec::Linear { n: 5, m: 3, d: 2, with_loss: true };
        assert_eq!(generate(&spec, 7).unwrap(), generate(&spec, 7).unwrap());
        assert_ne!(generate(&spec, 7).unwrap(), generate(&spec, 8).unwrap());
    }

    #[test]
    fn threshold_matches_optin_constructor() {
        let g = generate(&GeneratorSpec::Threshold { n: 9 }, 3).unwrap();
        let t = random_thresholds(9, 3);
        assert_eq!(Some(&g), make_optin_game(&t).unwrap().as_aggregative());
    }

    #[test]
    fn linear_one_dimensional_validates() {
        for seed in 0..50 {
            let g = generate(&GeneratorSpec::Linear { n: 4, m: 2, d: 1, with_loss: false }, seed).unwrap();
            assert_eq!(g.d(), 1);
        }
    }

    #[test]
    fn anonymous_counts_shares() {
        let g = generate(&GeneratorSpec::Anonymous { n: 4, m: 3, with_loss: false }, 1).unwrap();
        let s = g.aggregator(&PureProfile(vec![0, 2, 2, 1])).unwrap();
        assert_eq!(s, vec![0.25, 0.25, 0.5]);
    }

    #[test]
    fn market_kind_converts() {
        let g = generate(&GeneratorSpec::Market { n: 4, d: 2, lambda: 8.0, separable: true }, 2).unwrap();
        assert_eq!((g.m(), g.d()), (9, 2));
        assert_eq!(g.gamma(), 1.0 / 8.0);
    }
}
