use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::generate::{generate, GeneratorSpec};
use super::run::{check_spec, run_algorithm, AlgorithmSpec};
use crate::dp::{NoiseMode, NoiseSource};
use crate::error::{Error, Result};
use crate::game::AggregativeGame;
use crate::util::mix_seed;
use crate::PureProfile;

const GAME_SALT: u64 = 0x6761_6d65;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum GameSource {
    File {
        path: PathBuf,
    },
    /// A fresh game per trial, seeded from the trial seed.
    Generate {
        spec: GeneratorSpec,
    },
}

/// Everything needed to reproduce a batch; echoed into the summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(flatten)]
    pub algorithm: AlgorithmSpec,
    pub game: GameSource,
    pub trials: usize,
    #[serde(default)]
    pub noise_off: bool,
    pub csv: PathBuf,
    #[serde(default)]
    pub summary: Option<PathBuf>,
    /// Record wall time; off by default so reruns are byte-identical.
    #[serde(default)]
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub seed: u64,
    pub profile: Option<PureProfile>,
    pub per_player_regret: Option<Vec<f64>>,
    pub regret: Option<f64>,
    pub bound: f64,
    pub loss: Option<f64>,
    pub quality: Option<f64>,
    pub abort: bool,
    pub violated: bool,
    pub transcript_digest: String,
    pub time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub config: ExperimentConfig,
    pub trials: usize,
    pub aborts: usize,
    pub violations: usize,
    /// (aborts + violations) / trials.
    pub failure_rate: f64,
    pub mean_regret: Option<f64>,
    pub max_regret: Option<f64>,
}

#[derive(Serialize)]
struct CsvRow {
    seed: u64,
    regret: Option<f64>,
    bound: f64,
    loss: Option<f64>,
    quality: Option<f64>,
    abort_flag: u8,
    time_ms: f64,
}

pub const CSV_HEADER: [&str; 7] = ["seed", "regret", "bound", "loss", "quality", "abort_flag", "time_ms"];

impl ExperimentConfig {
    pub fn trial_seed(&self, t: usize) -> u64 {
        mix_seed(self.seed, t as u64)
    }

    fn mode(&self) -> NoiseMode {
        if self.noise_off {
            NoiseMode::NoiseOff
        } else {
            NoiseMode::Noisy
        }
    }
}

fn run_trial(config: &ExperimentConfig, fixed: Option<&AggregativeGame>, t: usize) -> Result<ResultRecord> {
    let seed = config.trial_seed(t);
    let generated;
    let game = match (fixed, &config.game) {
        (Some(g), _) => g,
        (None, GameSource::Generate { spec }) => {
            generated = generate(spec, mix_seed(seed, GAME_SALT))?;
            &generated
        }
        (None, GameSource::File { .. }) => unreachable!("file games are loaded up front"),
    };
    check_spec(&config.algorithm, game)?;
    let start = Instant::now();
    let r = run_algorithm(&config.algorithm, game, &mut NoiseSource::new(seed, config.mode()))?;
    let time_ms = if config.timing { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
    Ok(ResultRecord {
        seed,
        profile: r.profile().cloned(),
        per_player_regret: r.regret.as_ref().map(|x| x.per_player.clone()),
        regret: r.regret.as_ref().map(|x| x.max),
        bound: r.bound,
        loss: r.loss,
        quality: r.quality,
        abort: r.outcome.is_abort(),
        violated: r.violated(),
        transcript_digest: r.transcript_digest,
        time_ms,
    })
}

/// Runs every trial; records come back in trial order whatever the
/// scheduling.
pub fn run_trials(config: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    let fixed = match &config.game {
        GameSource::File { path } => Some(AggregativeGame::load(path)?),
        GameSource::Generate { .. } => None,
    };
    let fixed = fixed.as_ref();
    #[cfg(feature = "parallel")]
    let records: Vec<Result<ResultRecord>> = {
        use rayon::prelude::*;
        (0..config.trials).into_par_iter().map(|t| run_trial(config, fixed, t)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let records: Vec<Result<ResultRecord>> = (0..config.trials).map(|t| run_trial(config, fixed, t)).collect();
    records.into_iter().collect()
}

pub fn summarize(config: &ExperimentConfig, records: &[ResultRecord]) -> ExperimentSummary {
    let aborts = records.iter().filter(|r| r.abort).count();
    let violations = records.iter().filter(|r| r.violated).count();
    let regrets: Vec<f64> = records.iter().filter_map(|r| r.regret).collect();
    let mean_regret = (!regrets.is_empty()).then(|| regrets.iter().sum::<f64>() / regrets.len() as f64);
    let max_regret = regrets.iter().cloned().reduce(f64::max);
    ExperimentSummary {
        config: config.clone(),
        trials: records.len(),
        aborts,
        violations,
        failure_rate: if records.is_empty() { 0.0 } else { (aborts + violations) as f64 / records.len() as f64 },
        mean_regret,
        max_regret,
    }
}

pub fn write_csv(path: &Path, records: &[ResultRecord]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.serialize(CsvRow {
            seed: r.seed,
            regret: r.regret,
            bound: r.bound,
            loss: r.loss,
            quality: r.quality,
            abort_flag: r.abort as u8,
            time_ms: r.time_ms,
        })?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Runs the batch, writes the CSV and (if configured) the JSON summary.
pub fn run_experiment(config: &ExperimentConfig) -> Result<(Vec<ResultRecord>, ExperimentSummary)> {
    let records = run_trials(config)?;
    write_csv(&config.csv, &records)?;
    let summary = summarize(config, &records);
    if let Some(path) = &config.summary {
        let text = serde_json::to_string_pretty(&summary)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
    }
    Ok((records, summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(dir: &Path, trials: usize) -> ExperimentConfig {
        ExperimentConfig {
            seed: 11,
            algorithm: AlgorithmSpec::Psummnash { epsilon: 10.0, alpha: None, beta: 0.05 },
            game: GameSource::Generate { spec: GeneratorSpec::Threshold { n: 100 } },
            trials,
            noise_off: false,
            csv: dir.join("out.csv"),
            summary: Some(dir.join("summary.json")),
            timing: false,
        }
    }

    #[test]
    fn zero_trials_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let c = config(dir.path(), 0);
        run_experiment(&c).unwrap();
        let text = std::fs::read_to_string(&c.csv).unwrap();
        assert_eq!(text, "seed,regret,bound,loss,quality,abort_flag,time_ms\n");
    }

    #[test]
    fn rerun_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let c = config(dir.path(), 6);
        run_experiment(&c).unwrap();
        let first = std::fs::read(&c.csv).unwrap();
        let first_summary = std::fs::read(c.summary.as_ref().unwrap()).unwrap();
        run_experiment(&c).unwrap();
        assert_eq!(first, std::fs::read(&c.csv).unwrap());
        assert_eq!(first_summary, std::fs::read(c.summary.as_ref().unwrap()).unwrap());
    }

    #[test]
    fn config_round_trips() {
        let c = config(Path::new("/tmp"), 3);
        let text = serde_json::to_string(&c).unwrap();
        assert!(text.contains("\"algorithm\":\"psummnash\""));
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
    }
}
