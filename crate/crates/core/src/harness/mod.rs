//! Experiment plumbing: random game families, exhaustive equilibrium
//! oracles, truthfulness deviation tests and reproducible batch runs.

mod brute;
mod deviation;
mod experiment;
mod generate;
mod run;

pub use brute::{
    brute_force_equilibria, brute_force_onedim, for_each_profile, naive_regret, opt_loss, opt_quality, Equilibrium,
    BRUTE_FORCE_LIMIT,
};
pub use deviation::{deviation_test, DeviationReport};
pub use experiment::{
    run_experiment, run_trials, summarize, write_csv, ExperimentConfig, ExperimentSummary, GameSource, ResultRecord,
    CSV_HEADER,
};
pub use generate::{generate, random_thresholds, GeneratorSpec};
pub use run::{check_spec, default_delta, run_algorithm, AlgorithmSpec, RunResult, DEFAULT_BETA};
