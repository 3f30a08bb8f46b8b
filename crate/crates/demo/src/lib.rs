//! Browser bindings for three small views of the library: the fixed-point
//! search on a participation game, hinge pricing in the market game, and the
//! exponential mechanism's sampling distribution. Every export returns a JSON
//! string the page draws on a canvas.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use privmed::dp::{exponential_mechanism, exponential_probabilities, NoiseSource, ScoredOutcomeSet};
use privmed::market::{hinge_price_scalar, security_loss};
use privmed::onedim::{make_optin_game, psummnash, psummnash_min_alpha};
use privmed::Error;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

const MAX_SAMPLES: usize = 1_000_000;

fn to_js(r: Result<Value, Error>) -> Result<String, JsValue> {
    r.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e.to_string()))
}

/// Opt-in thresholds, evenly spread over [lo, hi].
fn spread_thresholds(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    if n == 1 {
        return vec![(lo + hi) / 2.0];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// The best-response map V(s) on the search grid and one private run.
pub fn optin_search(n: usize, lo: f64, hi: f64, epsilon: f64, seed: u64) -> Result<Value, Error> {
    if n < 2 || !(0.0..=1.0).contains(&lo) || !(lo..=1.0).contains(&hi) {
        return Err(Error::Parameter("need n ≥ 2 and 0 ≤ lo ≤ hi ≤ 1".into()));
    }
    let game = make_optin_game(&spread_thresholds(n, lo, hi))?;
    let beta = 0.05;
    let alpha = psummnash_min_alpha(&game, epsilon, beta);
    let out = psummnash(&game, epsilon, alpha, beta, &mut NoiseSource::noisy(seed))?;
    let grid = game.grid(alpha);
    let curve: Vec<[f64; 2]> = grid.iter().map(|&s| [s, game.value(s)]).collect();
    let (turnout, regret) = match out.outcome.profile() {
        Some(x) => (Some(game.aggregate(x.actions())), Some(game.regret(x)?.max)),
        None => (None, None),
    };
    Ok(json!({
        "alpha": alpha,
        "curve": curve,
        "stage": out.stage,
        "turnout": turnout,
        "regret": regret,
        "bound": out.regret_bound,
    }))
}

/// Price and worst-case maker loss as functions of the net order flow.
pub fn market_curves(lambda: f64, points: usize) -> Result<Value, Error> {
    if !(lambda > 0.0) || points < 2 {
        return Err(Error::Parameter("need λ > 0 and at least two points".into()));
    }
    let xs: Vec<f64> = (0..points).map(|k| -lambda + 2.0 * lambda * k as f64 / (points - 1) as f64).collect();
    Ok(json!({
        "imbalance": xs,
        "price": xs.iter().map(|&i| hinge_price_scalar(i, lambda)).collect::<Vec<_>>(),
        "loss": xs.iter().map(|&i| security_loss(i, lambda)).collect::<Vec<_>>(),
        "loss_cap": lambda / 16.0,
    }))
}

/// Analytic selection probabilities next to empirical frequencies.
pub fn exp_distribution(scores: &[f64], epsilon: f64, samples: usize, seed: u64) -> Result<Value, Error> {
    if samples == 0 || samples > MAX_SAMPLES {
        return Err(Error::Parameter(format!("samples must be in 1..={MAX_SAMPLES}")));
    }
    let set = ScoredOutcomeSet::indexed(scores.to_vec(), 1.0)?;
    let mut src = NoiseSource::noisy(seed);
    let mut counts = vec![0usize; scores.len()];
    for _ in 0..samples {
        counts[exponential_mechanism(&set, epsilon, &mut src)?] += 1;
    }
    let freq: Vec<f64> = counts.iter().map(|&c| c as f64 / samples as f64).collect();
    Ok(json!({
        "analytic": exponential_probabilities(scores, epsilon, 1.0),
        "empirical": freq,
    }))
}

#[wasm_bindgen(js_name = optinSearch)]
pub fn optin_search_js(n: usize, lo: f64, hi: f64, epsilon: f64, seed: u32) -> Result<String, JsValue> {
    to_js(optin_search(n, lo, hi, epsilon, seed as u64))
}

#[wasm_bindgen(js_name = marketCurves)]
pub fn market_curves_js(lambda: f64, points: usize) -> Result<String, JsValue> {
    to_js(market_curves(lambda, points))
}

#[wasm_bindgen(js_name = expDistribution)]
pub fn exp_distribution_js(scores: &[f64], epsilon: f64, samples: usize, seed: u32) -> Result<String, JsValue> {
    to_js(exp_distribution(scores, epsilon, samples, seed as u64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds_cover_range() {
        assert_eq!(spread_thresholds(3, 0.2, 0.6), vec![0.2, 0.4, 0.6]);
        assert_eq!(spread_thresholds(1, 0.2, 0.6), vec![0.4]);
    }

    #[test]
    fn market_curve_peaks_at_cap() {
        let v = market_curves(8.0, 33).unwrap();
        let loss: Vec<f64> = serde_json::from_value(v["loss"].clone()).unwrap();
        let peak = loss.iter().cloned().fold(0.0, f64::max);
        assert_eq!(peak, 0.5);
        assert_eq!(v["loss_cap"], 0.5);
    }
}
