use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::AggregativeGame;
use crate::onedim::{Quality, QuasiAggregativeGame};
use crate::PureProfile;

/// Largest m^n the exhaustive oracles accept.
pub const BRUTE_FORCE_LIMIT: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub profile: PureProfile,
    pub regret: f64,
}

fn profile_count(n: usize, m: usize) -> Result<u64> {
    let mut total: u64 = 1;
    for _ in 0..n {
        total = total.saturating_mul(m as u64);
        if total > BRUTE_FORCE_LIMIT {
            return Err(Error::Budget(format!("{m}^{n} profiles exceed the enumeration limit of {BRUTE_FORCE_LIMIT}")));
        }
    }
    Ok(total)
}

/// Calls `visit` on every profile in Aⁿ, first player fastest.
pub fn for_each_profile(n: usize, m: usize, mut visit: impl FnMut(&[usize])) -> Result<()> {
    profile_count(n, m)?;
    let mut x = vec![0usize; n];
    loop {
        visit(&x);
        let mut i = 0;
        loop {
            if i == n {
                return Ok(());
            }
            x[i] += 1;
            if x[i] < m {
                break;
            }
            x[i] = 0;
            i += 1;
        }
    }
}

/// Regret recomputed from scratch for every deviation, independent of the
/// incremental bookkeeping in [`AggregativeGame::regret`].
pub fn naive_regret(game: &AggregativeGame, x: &[usize]) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..game.n())
        .map(|i| {
            let current = game.utility(i, x[i], &game.aggregator(&PureProfile(y.clone())).expect("valid profile"));
            let mut best = current;
            for a in 0..game.m() {
                y[i] = a;
                let s = game.aggregator(&PureProfile(y.clone())).expect("valid profile");
                best = best.max(game.utility(i, a, &s));
            }
            y[i] = x[i];
            best - current
        })
        .collect()
}

/// Every ζ-approximate pure equilibrium, with its exact regret.
pub fn brute_force_equilibria(game: &AggregativeGame, zeta: f64) -> Result<Vec<Equilibrium>> {
    let mut out = Vec::new();
    for_each_profile(game.n(), game.m(), |x| {
        let regret = naive_regret(game, x).into_iter().fold(0.0, f64::max);
        if regret <= zeta {
            out.push(Equilibrium { profile: PureProfile(x.to_vec()), regret });
        }
    })?;
    Ok(out)
}

pub fn brute_force_onedim(game: &QuasiAggregativeGame, zeta: f64) -> Result<Vec<Equilibrium>> {
    let mut out = Vec::new();
    let mut failure = None;
    for_each_profile(game.n(), game.m(), |x| {
        let profile = PureProfile(x.to_vec());
        match game.regret(&profile) {
            Ok(r) if r.max <= zeta => out.push(Equilibrium { profile, regret: r.max }),
            Ok(_) => {}
            Err(e) => failure = Some(e),
        }
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Smallest designer loss over the equilibrium set.
pub fn opt_loss(game: &AggregativeGame, equilibria: &[Equilibrium]) -> Result<Option<f64>> {
    let mut best: Option<f64> = None;
    for e in equilibria {
        let l = game.loss(&e.profile)?;
        best = Some(best.map_or(l, |b| b.min(l)));
    }
    Ok(best)
}

/// Largest aggregator quality over the equilibrium set.
pub fn opt_quality(game: &QuasiAggregativeGame, quality: &Quality, equilibria: &[Equilibrium]) -> Option<f64> {
    equilibria
        .iter()
        .map(|e| quality.value(game.aggregate(e.profile.actions())))
        .fold(None, |acc: Option<f64>, q| Some(acc.map_or(q, |a| a.max(q))))
}
