use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market;

/// Regular grid shared by every axis of a tabulated utility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl TableGrid {
    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.points - 1) as f64
    }

    pub fn nodes(&self, dims: usize) -> usize {
        self.points.pow(dims as u32)
    }

    fn validate(&self) -> Result<()> {
        if self.points < 2 || !(self.hi > self.lo) {
            return Err(Error::invalid(format!("table grid needs lo < hi and at least two points, got {self:?}")));
        }
        Ok(())
    }
}

/// One player's utility as a function of her own action and the aggregator.
///
/// Every variant is 1-Lipschitz in the aggregator under the ∞-norm and takes
/// values in [−1, 1]; both are checked by [`PlayerUtility::validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlayerUtility {
    /// u(a, s) = constant[a] + ⟨weights[a], s⟩ with ‖weights[a]‖₁ ≤ 1.
    Linear { constant: Vec<f64>, weights: Vec<Vec<f64>> },
    /// Values on a regular grid, multilinear in between, clamped outside.
    Table { grid: TableGrid, values: Vec<Vec<f64>> },
    /// Trader in the hinge-priced market; `valuation` has 3^d entries.
    Market { valuation: Vec<f64>, lambda: f64 },
    /// Binary participation game. Action 0 is opt-in with payoff
    /// clamp(slope·(s − threshold), −1, 1); action 1 is opt-out with payoff 0.
    Threshold { threshold: f64, slope: f64 },
}

pub const OPT_IN: usize = 0;
pub const OPT_OUT: usize = 1;

impl PlayerUtility {
    pub fn num_actions(&self) -> usize {
        match self {
            PlayerUtility::Linear { constant, .. } => constant.len(),
            PlayerUtility::Table { values, .. } => values.len(),
            PlayerUtility::Market { valuation, .. } => valuation.len(),
            PlayerUtility::Threshold { .. } => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            PlayerUtility::Linear { .. } => "linear",
            PlayerUtility::Table { .. } => "table",
            PlayerUtility::Market { .. } => "market",
            PlayerUtility::Threshold { .. } => "threshold",
        }
    }

    pub fn value(&self, action: usize, s: &[f64]) -> f64 {
        match self {
            PlayerUtility::Linear { constant, weights } => {
                constant[action] + weights[action].iter().zip(s).map(|(w, x)| w * x).sum::<f64>()
            }
            PlayerUtility::Table { grid, values } => interpolate(grid, &values[action], s),
            PlayerUtility::Market { valuation, lambda } => {
                market::normalized_payoff(valuation[action], action, s, *lambda)
            }
            PlayerUtility::Threshold { threshold, slope } => {
                if action == OPT_IN {
                    (slope * (s[0] - threshold)).clamp(-1.0, 1.0)
                } else {
                    0.0
                }
            }
        }
    }

    /// Checks shape, the [−1, 1] range over `[-w, w]^d` and the 1-Lipschitz
    /// condition.
    pub fn validate(&self, m: usize, d: usize, w: f64) -> Result<()> {
        if self.num_actions() != m {
            return Err(Error::invalid(format!(
                "{} utility has {} actions, game has {m}",
                self.kind(),
                self.num_actions()
            )));
        }
        match self {
            PlayerUtility::Linear { constant, weights } => {
                if weights.len() != m {
                    return Err(Error::invalid("linear utility: one weight vector per action"));
                }
                for (a, (c, wv)) in constant.iter().zip(weights).enumerate() {
                    if wv.len() != d {
                        return Err(Error::invalid(format!(
                            "linear utility: weight vector of action {a} has length {}, expected {d}",
                            wv.len()
                        )));
                    }
                    let l1: f64 = wv.iter().map(|x| x.abs()).sum();
                    if !c.is_finite() || wv.iter().any(|x| !x.is_finite()) {
                        return Err(Error::invalid("linear utility: non-finite coefficient"));
                    }
                    if l1 > 1.0 + 1e-12 {
                        return Err(Error::invalid(format!(
                            "linear utility: action {a} has ‖w‖₁ = {l1} > 1 (not 1-Lipschitz)"
                        )));
                    }
                    if c.abs() + l1 * w > 1.0 + 1e-12 {
                        return Err(Error::invalid(format!(
                            "linear utility: action {a} leaves [-1,1] on [-{w},{w}]^{d}"
                        )));
                    }
                }
            }
            PlayerUtility::Table { grid, values } => {
                grid.validate()?;
                let nodes = grid.nodes(d);
                for row in values {
                    if row.len() != nodes {
                        return Err(Error::invalid(format!(
                            "table utility: {} values, grid has {nodes} nodes",
                            row.len()
                        )));
                    }
                    if row.iter().any(|v| !(v.abs() <= 1.0)) {
                        return Err(Error::invalid("table utility: values must lie in [-1,1]"));
                    }
                    let slope = table_slope_sum(grid, row, d);
                    if slope > 1.0 + 1e-9 {
                        return Err(Error::invalid(format!(
                            "table utility: summed grid slope {slope} exceeds 1 (not 1-Lipschitz)"
                        )));
                    }
                }
            }
            PlayerUtility::Market { valuation, lambda } => {
                if !(*lambda > 0.0) {
                    return Err(Error::invalid("market utility: λ must be positive"));
                }
                if valuation.len() != 3usize.pow(d as u32) {
                    return Err(Error::invalid(format!(
                        "market utility: {} valuations for d = {d}, expected 3^d",
                        valuation.len()
                    )));
                }
                let bound = d as f64;
                if valuation.iter().any(|v| !(v.abs() <= bound)) {
                    return Err(Error::invalid("market utility: valuations must lie in [-d, d]"));
                }
            }
            PlayerUtility::Threshold { threshold, slope } => {
                if d != 1 {
                    return Err(Error::invalid("threshold utility needs a one-dimensional aggregator"));
                }
                if !threshold.is_finite() || !(slope.abs() <= 1.0) || *slope == 0.0 {
                    return Err(Error::invalid(format!(
                        "threshold utility: need finite threshold and 0 < |slope| <= 1, got {threshold}, {slope}"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn flat_index(idx: &[usize], points: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * points + i)
}

fn interpolate(grid: &TableGrid, values: &[f64], s: &[f64]) -> f64 {
    let d = s.len();
    let h = grid.spacing();
    let mut base = vec![0usize; d];
    let mut frac = vec![0.0; d];
    for k in 0..d {
        let t = (s[k].clamp(grid.lo, grid.hi) - grid.lo) / h;
        let i0 = (t.floor() as usize).min(grid.points - 2);
        base[k] = i0;
        frac[k] = t - i0 as f64;
    }
    let mut idx = vec![0usize; d];
    let mut total = 0.0;
    for corner in 0..(1usize << d) {
        let mut weight = 1.0;
        for k in 0..d {
            let up = (corner >> k) & 1 == 1;
            idx[k] = base[k] + up as usize;
            weight *= if up { frac[k] } else { 1.0 - frac[k] };
        }
        if weight != 0.0 {
            total += weight * values[flat_index(&idx, grid.points)];
        }
    }
    total
}

/// Σ_k max |Δv|/h along axis k. Multilinear interpolation is L-Lipschitz in
/// the ∞-norm with L equal to this sum.
fn table_slope_sum(grid: &TableGrid, values: &[f64], d: usize) -> f64 {
    let g = grid.points;
    let h = grid.spacing();
    let nodes = grid.nodes(d);
    let mut total = 0.0;
    for axis in 0..d {
        let stride = g.pow((d - 1 - axis) as u32);
        let mut worst: f64 = 0.0;
        for node in 0..nodes {
            let coord = (node / stride) % g;
            if coord + 1 < g {
                worst = worst.max((values[node + stride] - values[node]).abs() / h);
            }
        }
        total += worst;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_interpolates_linearly_in_1d() {
        let u = PlayerUtility::Table {
            grid: TableGrid { lo: -1.0, hi: 1.0, points: 3 },
            values: vec![vec![-0.5, 0.0, 0.5]],
        };
        assert!((u.value(0, &[0.5]) - 0.25).abs() < 1e-15);
        assert!((u.value(0, &[-2.0]) + 0.5).abs() < 1e-15);
        assert!(u.validate(1, 1, 1.0).is_ok());
    }

    #[test]
    fn table_bilinear() {
        // v(x, y) = 0.25x + 0.25y sampled on {0,1}^2 is reproduced exactly
        let u = PlayerUtility::Table {
            grid: TableGrid { lo: 0.0, hi: 1.0, points: 2 },
            values: vec![vec![0.0, 0.25, 0.25, 0.5]],
        };
        let v = u.value(0, &[0.3, 0.6]);
        assert!((v - (0.25 * 0.3 + 0.25 * 0.6)).abs() < 1e-15);
        assert!(u.validate(1, 2, 1.0).is_ok());
    }

    #[test]
    fn steep_table_rejected() {
        let u = PlayerUtility::Table { grid: TableGrid { lo: 0.0, hi: 0.1, points: 2 }, values: vec![vec![0.0, 0.5]] };
        assert!(matches!(u.validate(1, 1, 1.0), Err(Error::Validation(_))));
    }

    #[test]
    fn linear_range_and_lipschitz() {
        let ok = PlayerUtility::Linear { constant: vec![0.2, -0.1], weights: vec![vec![0.5], vec![-0.8]] };
        assert!(ok.validate(2, 1, 1.0).is_ok());
        let steep = PlayerUtility::Linear { constant: vec![0.0], weights: vec![vec![0.7, 0.7]] };
        assert!(steep.validate(1, 2, 0.1).is_err());
        let out_of_range = PlayerUtility::Linear { constant: vec![0.5], weights: vec![vec![1.0]] };
        assert!(out_of_range.validate(1, 1, 1.0).is_err());
    }

    #[test]
    fn threshold_payoffs() {
        let u = PlayerUtility::Threshold { threshold: 0.4, slope: 1.0 };
        assert_eq!(u.value(OPT_OUT, &[0.9]), 0.0);
        assert!((u.value(OPT_IN, &[0.9]) - 0.5).abs() < 1e-15);
        assert!(u.value(OPT_IN, &[0.1]) < 0.0);
        assert!(PlayerUtility::Threshold { threshold: 0.4, slope: 2.0 }.validate(2, 1, 1.0).is_err());
    }
}
