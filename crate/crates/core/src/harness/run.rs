use serde::{Deserialize, Serialize};

use crate::dp::NoiseSource;
use crate::error::{Error, Result};
use crate::game::{AggregativeGame, RegretReport};
use crate::onedim::{
    psummnash, psummnash_min_alpha, select_equilibrium, selection_min_alpha, Quality, QuasiAggregativeGame,
    SelectionParams,
};
use crate::presl::{existence_bound, npresl, presl, PreslParams};
use crate::util::digest_json;
use crate::{Outcome, PureProfile};

pub const DEFAULT_BETA: f64 = 0.05;

/// δ = 1/n, kept inside (0, 1).
pub fn default_delta(n: usize) -> f64 {
    1.0 / n.max(2) as f64
}

/// Which mediator to run and with what parameters. Omitted values take the
/// documented defaults: ζ at the existence bound, δ = 1/n, α at the
/// accuracy floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
pub enum AlgorithmSpec {
    Presl {
        #[serde(default)]
        zeta: Option<f64>,
        epsilon: f64,
        #[serde(default)]
        delta: Option<f64>,
        beta: f64,
        /// Hand-picked resolution; E₁ defaults to α/2.
        #[serde(default)]
        alpha: Option<f64>,
        #[serde(default)]
        e1: Option<f64>,
    },
    Npresl {
        #[serde(default)]
        zeta: Option<f64>,
        alpha: f64,
        beta: f64,
    },
    Psummnash {
        epsilon: f64,
        #[serde(default)]
        alpha: Option<f64>,
        beta: f64,
    },
    Select {
        #[serde(default)]
        zeta: Option<f64>,
        epsilon: f64,
        #[serde(default)]
        alpha: Option<f64>,
        beta: f64,
        quality: Quality,
    },
}

impl AlgorithmSpec {
    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmSpec::Presl { .. } => "presl",
            AlgorithmSpec::Npresl { .. } => "npresl",
            AlgorithmSpec::Psummnash { .. } => "psummnash",
            AlgorithmSpec::Select { .. } => "select",
        }
    }

    /// (ε, δ, β) of the mechanism; `None` for the non-private one.
    pub fn privacy(&self, n: usize) -> Option<(f64, f64, f64)> {
        match *self {
            AlgorithmSpec::Presl { epsilon, delta, beta, .. } => {
                Some((epsilon, delta.unwrap_or_else(|| default_delta(n)), beta))
            }
            AlgorithmSpec::Npresl { .. } => None,
            AlgorithmSpec::Psummnash { epsilon, beta, .. } | AlgorithmSpec::Select { epsilon, beta, .. } => {
                Some((epsilon, 0.0, beta))
            }
        }
    }

    fn beta(&self) -> f64 {
        match *self {
            AlgorithmSpec::Presl { beta, .. }
            | AlgorithmSpec::Npresl { beta, .. }
            | AlgorithmSpec::Psummnash { beta, .. }
            | AlgorithmSpec::Select { beta, .. } => beta,
        }
    }
}

/// Uniform view of one mediator run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub algorithm: String,
    pub outcome: Outcome,
    /// Regret bound guaranteed for these parameters.
    pub bound: f64,
    pub regret: Option<RegretReport>,
    pub loss: Option<f64>,
    pub quality: Option<f64>,
    pub aggregator: Option<Vec<f64>>,
    /// Resolved parameters (after defaults and grid snapping).
    pub parameters: serde_json::Value,
    pub transcript: serde_json::Value,
    pub transcript_digest: String,
    pub beta: f64,
}

impl RunResult {
    pub fn profile(&self) -> Option<&PureProfile> {
        self.outcome.profile()
    }

    pub fn violated(&self) -> bool {
        self.regret.as_ref().is_some_and(|r| r.max > self.bound + 1e-9)
    }

    pub fn failed(&self) -> bool {
        self.outcome.is_abort() || self.violated()
    }
}

fn finish(
    game: &AggregativeGame,
    spec: &AlgorithmSpec,
    outcome: Outcome,
    bound: f64,
    quality: Option<&Quality>,
    parameters: serde_json::Value,
    transcript: serde_json::Value,
) -> Result<RunResult> {
    let (regret, loss, q, aggregator) = match outcome.profile() {
        Some(x) => {
            let s = game.aggregator(x)?;
            (Some(game.regret(x)?), Some(game.loss(x)?), quality.map(|q| q.value(s[0])), Some(s))
        }
        None => (None, None, None, None),
    };
    Ok(RunResult {
        algorithm: spec.name().to_string(),
        outcome,
        bound,
        regret,
        loss,
        quality: q,
        aggregator,
        transcript_digest: digest_json(&transcript),
        parameters,
        transcript,
        beta: spec.beta(),
    })
}

pub fn run_algorithm(spec: &AlgorithmSpec, game: &AggregativeGame, src: &mut NoiseSource) -> Result<RunResult> {
    let n = game.n();
    match spec {
        AlgorithmSpec::Presl { zeta, epsilon, delta, beta, alpha, e1 } => {
            let zeta = zeta.unwrap_or_else(|| existence_bound(n, game.m(), game.gamma()));
            let delta = delta.unwrap_or_else(|| default_delta(n));
            let params = match alpha {
                Some(a) => PreslParams::with_resolution(game, zeta, *epsilon, delta, *beta, *a, e1.unwrap_or(a / 2.0))?,
                None => PreslParams::derive(game, zeta, *epsilon, delta, *beta)?,
            };
            let out = presl(game, &params, src)?;
            finish(
                game,
                spec,
                out.outcome.clone(),
                params.regret_bound(),
                None,
                serde_json::to_value(&params)?,
                serde_json::to_value(&out.transcript)?,
            )
        }
        AlgorithmSpec::Npresl { zeta, alpha, beta } => {
            let zeta = zeta.unwrap_or_else(|| existence_bound(n, game.m(), game.gamma()));
            let out = npresl(game, zeta, *alpha, *beta, src)?;
            let params = serde_json::json!({
                "zeta": zeta, "alpha": alpha, "beta": beta, "xi": out.xi,
                "s_hat": out.s_hat, "objective": out.objective, "rounding_error": out.rounding_error,
            });
            finish(
                game,
                spec,
                Outcome::Profile(out.profile.clone()),
                out.regret_bound,
                None,
                params,
                serde_json::to_value(&out.mixed)?,
            )
        }
        AlgorithmSpec::Psummnash { epsilon, alpha, beta } => {
            let q = QuasiAggregativeGame::from_aggregative(game.clone())?;
            let alpha = alpha.unwrap_or_else(|| psummnash_min_alpha(&q, *epsilon, *beta));
            let out = psummnash(&q, *epsilon, alpha, *beta, src)?;
            let params = serde_json::json!({
                "epsilon": epsilon, "alpha": alpha, "beta": beta, "w": out.w, "stage": out.stage,
            });
            finish(
                game,
                spec,
                out.outcome.clone(),
                out.regret_bound,
                None,
                params,
                serde_json::to_value(&out.transcript)?,
            )
        }
        AlgorithmSpec::Select { zeta, epsilon, alpha, beta, quality } => {
            let q = QuasiAggregativeGame::from_aggregative(game.clone())?;
            let zeta = zeta.unwrap_or(4.0 * game.gamma());
            let alpha = alpha.unwrap_or_else(|| selection_min_alpha(&q, *epsilon, *beta));
            let params = SelectionParams::new(&q, quality.clone(), zeta, *epsilon, alpha, *beta)?;
            let out = select_equilibrium(&q, &params, src)?;
            let summary = serde_json::json!({
                "zeta": zeta, "epsilon": epsilon, "alpha": alpha, "beta": beta, "xi": params.xi,
                "associated": out.associated, "walk_regret_bound": out.walk_regret_bound,
                "quality_slack": out.quality_slack,
            });
            finish(
                game,
                spec,
                out.outcome.clone(),
                out.regret_bound,
                Some(quality),
                summary,
                serde_json::to_value(&out.transcript)?,
            )
        }
    }
}

/// Rejects specs that cannot be run on `game` before any work starts.
pub fn check_spec(spec: &AlgorithmSpec, game: &AggregativeGame) -> Result<()> {
    match spec {
        AlgorithmSpec::Psummnash { .. } | AlgorithmSpec::Select { .. } if game.d() != 1 => {
            Err(Error::param(format!("{} needs a one-dimensional game, got d = {}", spec.name(), game.d())))
        }
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{generate, GeneratorSpec};

    #[test]
    fn spec_json_shape() {
        let spec = AlgorithmSpec::Psummnash { epsilon: 2.0, alpha: None, beta: 0.05 };
        let v = serde_json::to_value(&spec).unwrap();
        assert_eq!(v["algorithm"], "psummnash");
        let back: AlgorithmSpec = serde_json::from_value(v).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn psummnash_run_reports_bound() {
        let g = generate(&GeneratorSpec::Threshold { n: 300 }, 5).unwrap();
        let spec = AlgorithmSpec::Psummnash { epsilon: 10.0, alpha: None, beta: 0.05 };
        let r = run_algorithm(&spec, &g, &mut NoiseSource::noise_off(1)).unwrap();
        assert!(!r.failed());
        let q = QuasiAggregativeGame::from_aggregative(g.clone()).unwrap();
        let alpha = psummnash_min_alpha(&q, 10.0, 0.05);
        assert_eq!(r.bound, 10.0 * alpha + 2.0 * g.gamma_eff());
    }

    #[test]
    fn select_needs_one_dimension() {
        let g = generate(&GeneratorSpec::Anonymous { n: 3, m: 2, with_loss: false }, 1).unwrap();
        let spec =
            AlgorithmSpec::Select { zeta: None, epsilon: 1.0, alpha: None, beta: 0.05, quality: Quality::identity() };
        assert!(check_spec(&spec, &g).is_err());
    }
}
