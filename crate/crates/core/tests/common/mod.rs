#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use privmed::game::MixedProfile;
use privmed::lp::{query_lp, FeasibilityLP};
use privmed::{AggregativeGame, PlayerType, PlayerUtility};

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Binary linear game at a chosen γ, W = nγ, constants kept small so the
/// aggregator actually matters.
pub fn small_linear_game(n: usize, gamma: f64, seed: u64) -> AggregativeGame {
    let mut r = rng(seed);
    let w = n as f64 * gamma;
    let players = (0..n)
        .map(|_| {
            let f = vec![(0..2).map(|_| r.gen_range(-1.0..=1.0)).collect()];
            let weights: Vec<Vec<f64>> = (0..2).map(|_| vec![r.gen_range(-1.0..=1.0)]).collect();
            let constant = (0..2).map(|_| r.gen_range(-0.1..=0.1)).collect();
            let loss = (0..2).map(|_| r.gen_range(0.0..=1.0)).collect();
            PlayerType::new(PlayerUtility::Linear { constant, weights }, f).with_loss(loss)
        })
        .collect();
    AggregativeGame::new(gamma, w, players).unwrap()
}

/// Participation game where each player either joins when turnout is high
/// (slope +1) or when it is low (slope −1).
pub fn mixed_threshold_game(n: usize, seed: u64) -> AggregativeGame {
    let mut r = rng(seed);
    let players = (0..n)
        .map(|_| {
            let threshold = r.gen_range(0.0..=1.0);
            let slope = if r.gen_bool(0.5) { 1.0 } else { -1.0 };
            PlayerType::new(PlayerUtility::Threshold { threshold, slope }, vec![vec![1.0, 0.0]])
        })
        .collect();
    AggregativeGame::new(1.0 / n as f64, 1.0, players).unwrap()
}

/// A feasible LP of the kind the selection mechanism poses: pin S(p) and
/// the expected loss to those of a random mixed profile restricted to
/// random supports.
pub fn planted_lp(game: &AggregativeGame, seed: u64) -> (FeasibilityLP, MixedProfile) {
    let mut r = rng(seed);
    let m = game.m();
    let mut supports = Vec::with_capacity(game.n());
    let mut rows = Vec::with_capacity(game.n());
    for _ in 0..game.n() {
        let mut support: Vec<usize> = (0..m).filter(|_| r.gen_bool(0.6)).collect();
        if support.is_empty() {
            support.push(r.gen_range(0..m));
        }
        let mut row = vec![0.0; m];
        for &j in &support {
            row[j] = r.gen_range(0.05..1.0);
        }
        supports.push(support);
        rows.push(row);
    }
    let planted = MixedProfile::normalized(rows).unwrap();
    let s = game.expected_aggregator(&planted).unwrap();
    let y = game.expected_loss(&planted).unwrap();
    let lp = query_lp(game, &s, Some(y), 0.0, 0.0, supports).unwrap();
    (lp, planted)
}
