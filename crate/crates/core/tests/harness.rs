use privmed::dp::NoiseMode;
use privmed::harness::{
    deviation_test, generate, run_experiment, AlgorithmSpec, ExperimentConfig, GameSource, GeneratorSpec,
};
use privmed::onedim::Quality;
use privmed::{PlayerType, PlayerUtility};

fn flipped(p: &PlayerType) -> PlayerType {
    match p.utility {
        PlayerUtility::Threshold { threshold, slope } => {
            PlayerType::new(PlayerUtility::Threshold { threshold: 1.0 - threshold, slope: -slope }, p.influence.clone())
        }
        _ => unreachable!("threshold games only"),
    }
}

#[test]
fn misreports_gain_little() {
    let specs = [
        AlgorithmSpec::Psummnash { epsilon: 10.0, alpha: None, beta: 0.05 },
        AlgorithmSpec::Select { zeta: None, epsilon: 100.0, alpha: None, beta: 0.05, quality: Quality::identity() },
    ];
    for (k, spec) in specs.iter().enumerate() {
        for seed in 0..3 {
            let game = generate(&GeneratorSpec::Threshold { n: 100 }, 40 + seed).unwrap();
            let player = (seed as usize * 17) % 100;
            let lie = flipped(game.player(player));
            let r = deviation_test(spec, &game, player, &lie, 200, seed + 10 * k as u64, NoiseMode::Noisy).unwrap();
            assert!(
                r.mean_gain <= r.eta + 2.0 * r.std_error,
                "{}: gain {} above η = {}",
                spec.name(),
                r.mean_gain,
                r.eta
            );
        }
    }
}

#[test]
fn npresl_has_no_truthfulness_budget() {
    let game = generate(&GeneratorSpec::Threshold { n: 10 }, 1).unwrap();
    let spec = AlgorithmSpec::Npresl { zeta: None, alpha: 0.2, beta: 0.05 };
    assert!(deviation_test(&spec, &game, 0, game.player(0), 5, 0, NoiseMode::Noisy).is_err());
}

#[test]
fn psummnash_batch_failure_rate() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig {
        seed: 77,
        algorithm: AlgorithmSpec::Psummnash { epsilon: 10.0, alpha: None, beta: 0.05 },
        game: GameSource::Generate { spec: GeneratorSpec::Threshold { n: 500 } },
        trials: 50,
        noise_off: false,
        csv: dir.path().join("runs.csv"),
        summary: Some(dir.path().join("summary.json")),
        timing: false,
    };
    let (records, summary) = run_experiment(&config).unwrap();
    assert_eq!(records.len(), 50);
    assert!(summary.failure_rate <= 0.05 + 0.05, "failure rate {}", summary.failure_rate);
    let csv = std::fs::read_to_string(&config.csv).unwrap();
    assert_eq!(csv.lines().count(), 51);
    assert!(csv.starts_with("seed,regret,bound,loss,quality,abort_flag,time_ms"));
    assert!(dir.path().join("summary.json").exists());
}
