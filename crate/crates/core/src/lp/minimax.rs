//! Certified-gap solver for min over supported product distributions of the
//! largest constraint violation.
//!
//! The problem is the bilinear saddle point min_p max_λ Σ_c λ_c g_c(p) with
//! λ on the simplex over constraints. Entropic mirror-prox on both blocks
//! drives the averaged iterates together; each averaged point yields an exact
//! bound (the primal max violation from above, the separable dual from
//! below), and the loop stops once the bounds are within `tol`.

use serde::{Deserialize, Serialize};

use super::{CrossConstraint, FeasibilityLP};
use crate::error::{Error, Result};
use crate::game::{AggregativeGame, MixedProfile};

const MAX_ITERATIONS: usize = 2_000_000;
const CHECK_EVERY: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaxSolution {
    /// Certified lower bound on the optimum.
    pub value: f64,
    /// Largest violation of `witness`, an upper bound on the optimum.
    pub upper: f64,
    pub witness: MixedProfile,
    pub iterations: usize,
    /// `upper − value ≤ tol` was reached before the iteration cap.
    pub certified: bool,
}

fn uniform_rows(lp: &FeasibilityLP) -> Vec<Vec<f64>> {
    lp.uniform_on_supports().rows().to_vec()
}

fn violations(lp: &FeasibilityLP, rows: &[Vec<f64>]) -> Vec<f64> {
    lp.constraints
        .iter()
        .map(|con| {
            let dot: f64 =
                con.coef.iter().zip(rows).map(|(f, q)| f.iter().zip(q).map(|(a, b)| a * b).sum::<f64>()).sum();
            lp.gamma * dot - con.bound
        })
        .collect()
}

/// γ Σ_c λ_c coef_c[i][j] for every player and action.
fn player_gradient(lp: &FeasibilityLP, lam: &[f64]) -> Vec<Vec<f64>> {
    let mut g = vec![vec![0.0; lp.m]; lp.n];
    for (con, &l) in lp.constraints.iter().zip(lam) {
        if l == 0.0 {
            continue;
        }
        for (gi, fi) in g.iter_mut().zip(&con.coef) {
            for (a, b) in gi.iter_mut().zip(fi) {
                *a += lp.gamma * l * b;
            }
        }
    }
    g
}

/// Exact dual bound at `lam` and the pure best response attaining it.
fn dual_bound(lp: &FeasibilityLP, lam: &[f64]) -> (f64, Vec<Vec<f64>>) {
    let g = player_gradient(lp, lam);
    let mut value = -lp.constraints.iter().zip(lam).map(|(c, l)| l * c.bound).sum::<f64>();
    let mut response = vec![vec![0.0; lp.m]; lp.n];
    for (i, r) in lp.supports.iter().enumerate() {
        let mut best = r[0];
        for &j in &r[1..] {
            if g[i][j] < g[i][best] {
                best = j;
            }
        }
        value += g[i][best];
        response[i][best] = 1.0;
    }
    (value, response)
}

fn entropic_step_players(lp: &FeasibilityLP, p: &[Vec<f64>], grad: &[Vec<f64>], tau: f64) -> Vec<Vec<f64>> {
    p.iter()
        .zip(grad)
        .zip(&lp.supports)
        .map(|((row, g), r)| {
            let lo = r.iter().map(|&j| g[j]).fold(f64::INFINITY, f64::min);
            let mut out = vec![0.0; lp.m];
            let mut total = 0.0;
            for &j in r {
                out[j] = row[j] * (-tau * (g[j] - lo)).exp();
                total += out[j];
            }
            for &j in r {
                out[j] /= total;
            }
            out
        })
        .collect()
}

fn entropic_step_dual(lam: &[f64], grad: &[f64], tau: f64) -> Vec<f64> {
    let hi = grad.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = lam.iter().zip(grad).map(|(l, g)| l * (tau * (g - hi)).exp()).collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= total);
    out
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// min_p max_c (γ⟨coef_c, p⟩ − bound_c) over distributions supported on
/// each player's support, to additive accuracy `tol`.
pub fn min_max_violation(lp: &FeasibilityLP, tol: f64) -> Result<MinimaxSolution> {
    if !(tol > 0.0) {
        return Err(Error::param(format!("tolerance must be positive, got {tol}")));
    }
    lp.validate()?;
    let k = lp.constraints.len();
    if k == 0 {
        return Err(Error::param("LP has no cross constraints"));
    }
    let fmax = lp.constraints.iter().flat_map(|c| c.coef.iter().flatten()).fold(0.0f64, |a, b| a.max(b.abs()));
    let lip = lp.gamma * fmax * (lp.n as f64).sqrt();

    let mut p = uniform_rows(lp);
    let mut lam = vec![1.0 / k as f64; k];
    let mut best_upper = max_of(&violations(lp, &p));
    let mut witness = p.clone();
    let (mut best_lower, response) = dual_bound(lp, &lam);
    let ru = max_of(&violations(lp, &response));
    if ru < best_upper {
        best_upper = ru;
        witness = response;
    }
    if lip == 0.0 || best_upper - best_lower <= tol {
        return Ok(MinimaxSolution {
            value: best_lower.min(best_upper),
            upper: best_upper,
            witness: MixedProfile::normalized(witness)?,
            iterations: 0,
            certified: true,
        });
    }

    let tau = 1.0 / (2.0 * lip);
    let omega: f64 = lp.supports.iter().map(|r| (r.len() as f64).ln()).sum::<f64>() + (k as f64).ln();
    let cap = ((4.0 * lip * omega / tol).ceil() as usize + 64).min(MAX_ITERATIONS);
    let mut p_sum = vec![vec![0.0; lp.m]; lp.n];
    let mut lam_sum = vec![0.0; k];
    let mut iterations = 0;
    let mut certified = false;
    for it in 1..=cap {
        iterations = it;
        let p_half = entropic_step_players(lp, &p, &player_gradient(lp, &lam), tau);
        let lam_half = entropic_step_dual(&lam, &violations(lp, &p), tau);
        p = entropic_step_players(lp, &p, &player_gradient(lp, &lam_half), tau);
        lam = entropic_step_dual(&lam, &violations(lp, &p_half), tau);
        for (acc, row) in p_sum.iter_mut().zip(&p_half) {
            for (a, v) in acc.iter_mut().zip(row) {
                *a += v;
            }
        }
        for (a, v) in lam_sum.iter_mut().zip(&lam_half) {
            *a += v;
        }
        if it % CHECK_EVERY == 0 || it == cap {
            let lam_bar: Vec<f64> = lam_sum.iter().map(|v| v / it as f64).collect();
            let (lo, response) = dual_bound(lp, &lam_bar);
            best_lower = best_lower.max(lo);
            let p_bar: Vec<Vec<f64>> = p_sum.iter().map(|row| row.iter().map(|v| v / it as f64).collect()).collect();
            let u = max_of(&violations(lp, &p_bar));
            if u < best_upper {
                best_upper = u;
                witness = p_bar;
            }
            let ru = max_of(&violations(lp, &response));
            if ru < best_upper {
                best_upper = ru;
                witness = response;
            }
            if best_upper - best_lower <= tol {
                certified = true;
                break;
            }
        }
    }
    Ok(MinimaxSolution {
        value: best_lower,
        upper: best_upper,
        witness: MixedProfile::normalized(witness)?,
        iterations,
        certified,
    })
}

/// Builds the LP family used for equilibrium search around a promised
/// aggregator `s_hat`: for every coordinate the two-sided constraint
/// |γ⟨f^k, p⟩ − ŝ_k| ≤ `agg_slack`, and when `y_hat` is given the loss
/// constraint γ⟨ℓ, p⟩ ≤ ŷ + `loss_slack`.
pub fn query_lp(
    game: &AggregativeGame,
    s_hat: &[f64],
    y_hat: Option<f64>,
    agg_slack: f64,
    loss_slack: f64,
    supports: Vec<Vec<usize>>,
) -> Result<FeasibilityLP> {
    if s_hat.len() != game.d() {
        return Err(Error::param("promised aggregator has the wrong dimension"));
    }
    let mut constraints = Vec::with_capacity(2 * game.d() + 1);
    for (k, &sk) in s_hat.iter().enumerate() {
        let up: Vec<Vec<f64>> = game.players().iter().map(|p| p.influence[k].clone()).collect();
        let down: Vec<Vec<f64>> = up.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
        constraints.push(CrossConstraint { coef: up, bound: sk + agg_slack });
        constraints.push(CrossConstraint { coef: down, bound: -sk + agg_slack });
    }
    if let Some(y) = y_hat {
        let coef = game.players().iter().map(|p| p.loss.clone().unwrap_or_else(|| vec![0.0; game.m()])).collect();
        constraints.push(CrossConstraint { coef, bound: y + loss_slack });
    }
    FeasibilityLP::new(game.n(), game.m(), game.gamma(), constraints, supports)
}

/// Q(ŝ, ŷ): the smallest a such that some distribution supported on the
/// ξ-aggregative best responses to ŝ has aggregator within a of ŝ and loss at
/// most ŷ + a. Pass `f64::INFINITY` for ŷ to drop the loss term.
pub fn exact_lp_min(game: &AggregativeGame, s_hat: &[f64], y_hat: f64, xi: f64, tol: f64) -> Result<MinimaxSolution> {
    if !(tol > 0.0) {
        return Err(Error::param(format!("tolerance must be positive, got {tol}")));
    }
    let supports = (0..game.n()).map(|i| game.abr_set(i, s_hat, xi)).collect();
    let y = if y_hat.is_finite() { Some(y_hat) } else { None };
    let lp = query_lp(game, s_hat, y, 0.0, 0.0, supports)?;
    min_max_violation(&lp, tol)
}
