use serde::{Deserialize, Serialize};

use super::run::{run_algorithm, AlgorithmSpec};
use crate::dp::{NoiseMode, NoiseSource};
use crate::error::{Error, Result};
use crate::game::{AggregativeGame, PlayerType};
use crate::util::mix_seed;
use crate::PureProfile;

/// Estimated gain from misreporting, with the truthfulness budget
/// η = bound + 2(2ε + β + δ) it should stay under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub player: usize,
    pub runs: usize,
    /// Mean of u_i(misreport) − u_i(truthful), both under the true type.
    pub mean_gain: f64,
    pub std_error: f64,
    pub eta: f64,
    /// Both runs of a pair share one seed.
    pub common_random_numbers: bool,
    /// On abort every player is told to play action 0.
    pub abort_fallback: String,
    pub gains: Vec<f64>,
}

/// Payoff to player `i` under her true type when `x` is played in the
/// true game.
fn true_payoff(game: &AggregativeGame, i: usize, x: &PureProfile) -> Result<f64> {
    let s = game.aggregator(x)?;
    Ok(game.utility(i, x[i], &s))
}

pub fn deviation_test(
    spec: &AlgorithmSpec,
    game: &AggregativeGame,
    player: usize,
    misreport: &PlayerType,
    runs: usize,
    seed: u64,
    mode: NoiseMode,
) -> Result<DeviationReport> {
    let (epsilon, delta, beta) = spec
        .privacy(game.n())
        .ok_or_else(|| Error::param("a non-private mediator carries no truthfulness guarantee"))?;
    if runs == 0 {
        return Err(Error::param("need at least one run"));
    }
    let lied = game.with_player(player, misreport.clone())?;
    let fallback = PureProfile(vec![0; game.n()]);
    let mut gains = Vec::with_capacity(runs);
    let mut bound: f64 = 0.0;
    for r in 0..runs {
        let run_seed = mix_seed(seed, r as u64);
        let honest = run_algorithm(spec, game, &mut NoiseSource::new(run_seed, mode))?;
        let dishonest = run_algorithm(spec, &lied, &mut NoiseSource::new(run_seed, mode))?;
        bound = bound.max(honest.bound);
        let x = honest.profile().unwrap_or(&fallback);
        let y = dishonest.profile().unwrap_or(&fallback);
        gains.push(true_payoff(game, player, y)? - true_payoff(game, player, x)?);
    }
    let k = runs as f64;
    let mean = gains.iter().sum::<f64>() / k;
    let var = if runs > 1 { gains.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (k - 1.0) } else { 0.0 };
    Ok(DeviationReport {
        player,
        runs,
        mean_gain: mean,
        std_error: (var / k).sqrt(),
        eta: bound + 2.0 * (2.0 * epsilon + beta + delta),
        common_random_numbers: true,
        abort_fallback: "all players play action 0".to_string(),
        gains,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::PlayerUtility;
    use crate::harness::{generate, GeneratorSpec};

    fn spec() -> AlgorithmSpec {
        AlgorithmSpec::Psummnash { epsilon: 5.0, alpha: None, beta: 0.05 }
    }

    #[test]
    fn truthful_misreport_gains_nothing() {
        let g = generate(&GeneratorSpec::Threshold { n: 40 }, 1).unwrap();
        let r = deviation_test(&spec(), &g, 3, g.player(3), 20, 9, NoiseMode::Noisy).unwrap();
        assert!(r.gains.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn constant_utilities_gain_nothing() {
        let players = (0..30)
            .map(|_| {
                PlayerType::new(
                    PlayerUtility::Linear { constant: vec![0.3, 0.3], weights: vec![vec![0.0], vec![0.0]] },
                    vec![vec![1.0, 0.0]],
                )
            })
            .collect();
        let g = AggregativeGame::new(1.0 / 30.0, 1.0, players).unwrap();
        let lie = PlayerType::new(PlayerUtility::Threshold { threshold: 0.9, slope: 1.0 }, vec![vec![1.0, 0.0]]);
        let r = deviation_test(&spec(), &g, 0, &lie, 10, 2, NoiseMode::Noisy).unwrap();
        assert!(r.gains.iter().all(|&x| x == 0.0));
    }
}
