use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use privmed::dp::{NoiseMode, NoiseSource};
use privmed::harness::{
    check_spec, default_delta, deviation_test, generate, run_algorithm, run_experiment, AlgorithmSpec,
    ExperimentConfig, GeneratorSpec, RunResult, DEFAULT_BETA,
};
use privmed::lp::{distmw_solve, DistMwParams, FeasibilityLP};
use privmed::market::{market_zeta, MarketGame};
use privmed::onedim::Quality;
use privmed::presl::existence_bound;
use privmed::{AggregativeGame, Error, PlayerType, PureProfile, Result};

#[derive(Parser)]
#[command(name = "privmed", version, about = "Private equilibrium computation for aggregative games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random game (or market) to JSON.
    GenGame(GenGameArgs),
    /// Private equilibrium selection over a multi-dimensional grid.
    Presl(PreslArgs),
    /// Non-private counterpart of presl.
    Npresl(NpreslArgs),
    /// Private fixed-point search for one-dimensional games.
    Psummnash(PsummArgs),
    /// Quality-ordered private equilibrium selection (one dimension).
    Select(SelectArgs),
    /// Run presl on a market and report prices and market-maker loss.
    MarketSim(MarketArgs),
    /// Solve a serialized feasibility LP with distributed MW.
    DistmwSolve(DistMwArgs),
    /// Regret report for a profile.
    Verify(VerifyArgs),
    /// Estimate the gain from a misreport.
    Deviate(DeviateArgs),
    /// Run a batch experiment from a JSON config.
    Bench(BenchArgs),
}

#[derive(Args, Serialize)]
struct Output {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Turn every noise draw off (debugging and oracle comparisons).
    #[arg(long)]
    no_noise: bool,
    /// Result file; defaults to <out-dir>/<command>.json, else stdout.
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
    #[arg(long, env = "PRIVMED_OUT_DIR")]
    #[serde(skip)]
    out_dir: Option<PathBuf>,
}

impl Output {
    fn source(&self) -> NoiseSource {
        NoiseSource::new(self.seed, self.mode())
    }

    fn mode(&self) -> NoiseMode {
        if self.no_noise {
            NoiseMode::NoiseOff
        } else {
            NoiseMode::Noisy
        }
    }

    fn write(&self, command: &str, value: &Value) -> Result<()> {
        let text = serde_json::to_string_pretty(value)? + "\n";
        let path = self.out.clone().or_else(|| self.out_dir.as_ref().map(|d| d.join(format!("{command}.json"))));
        match path {
            Some(p) => std::fs::write(&p, text).map_err(|e| Error::io(&p, e)),
            None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e)),
        }
    }
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Kind {
    Linear,
    Threshold,
    Market,
    Anonymous,
}

#[derive(Args, Serialize)]
struct GenGameArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long, default_value_t = 1)]
    d: usize,
    /// Market liquidity; defaults to n.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    with_loss: bool,
    #[arg(long)]
    separable: bool,
    /// For markets: write the converted aggregative game instead.
    #[arg(long)]
    as_game: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Serialize)]
struct PreslArgs {
    #[arg(long)]
    game: PathBuf,
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_BETA)]
    beta: f64,
    /// Override the derived resolution.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    e1: Option<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Serialize)]
struct NpreslArgs {
    #[arg(long)]
    game: PathBuf,
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = DEFAULT_BETA)]
    beta: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Serialize)]
struct PsummArgs {
    #[arg(long)]
    game: PathBuf,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_BETA)]
    beta: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Serialize)]
struct SelectArgs {
    #[arg(long)]
    game: PathBuf,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_BETA)]
    beta: f64,
    #[arg(long)]
    zeta: Option<f64>,
    /// `linear` (q(s) = s) or `table:<file>` with [[s, q], ...].
    #[arg(long, default_value = "linear")]
    quality: String,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Serialize)]
struct MarketArgs {
    #[arg(long)]
    market: PathBuf,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_BETA)]
    beta: f64,
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    e1: Option<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Serialize)]
struct DistMwArgs {
    #[arg(long)]
    lp: PathBuf,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = DEFAULT_BETA)]
    beta: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Serialize)]
struct VerifyArgs {
    #[arg(long)]
    game: PathBuf,
    /// JSON action array, or a result file written by this tool.
    #[arg(long)]
    profile: PathBuf,
    #[arg(long)]
    eta: Option<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Mediator {
    Presl,
    Psummnash,
    Select,
}

#[derive(Args, Serialize)]
struct DeviateArgs {
    #[arg(long)]
    game: PathBuf,
    #[arg(long, value_enum)]
    algorithm: Mediator,
    #[arg(long)]
    player: usize,
    /// JSON player type to report instead of the true one.
    #[arg(long)]
    misreport: PathBuf,
    #[arg(long, default_value_t = 200)]
    runs: usize,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_BETA)]
    beta: f64,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    zeta: Option<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Serialize)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    /// Record wall time per trial (breaks byte-identical reruns).
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    output: Output,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn parse_quality(arg: &str) -> Result<Quality> {
    if arg == "linear" {
        return Ok(Quality::identity());
    }
    let Some(path) = arg.strip_prefix("table:") else {
        return Err(Error::Parameter(format!("unknown quality `{arg}`; use linear or table:<file>")));
    };
    let points: Vec<[f64; 2]> = read_json(Path::new(path))?;
    let q = Quality::Table { points };
    q.validate()?;
    Ok(q)
}

fn load_profile(path: &Path) -> Result<PureProfile> {
    let v: Value = read_json(path)?;
    let actions = if v.is_array() {
        v
    } else {
        v.pointer("/result/outcome/profile")
            .cloned()
            .ok_or_else(|| Error::Parameter(format!("{} holds no profile", path.display())))?
    };
    Ok(serde_json::from_value(actions)?)
}

/// Writes the result file; returns whether the run aborted.
fn report<A: Serialize>(
    command: &str,
    args: &A,
    output: &Output,
    game: &AggregativeGame,
    r: &RunResult,
) -> Result<bool> {
    let value = json!({
        "command": command,
        "arguments": args,
        "game": { "n": game.n(), "m": game.m(), "d": game.d(), "gamma": game.gamma(), "W": game.w() },
        "result": r,
    });
    output.write(command, &value)?;
    Ok(r.outcome.is_abort())
}

fn run_spec<A: Serialize>(
    command: &str,
    args: &A,
    output: &Output,
    game_path: &Path,
    spec: AlgorithmSpec,
) -> Result<bool> {
    let game = AggregativeGame::load(game_path)?;
    check_spec(&spec, &game)?;
    let r = run_algorithm(&spec, &game, &mut output.source())?;
    report(command, args, output, &game, &r)
}

fn gen_game(a: &GenGameArgs) -> Result<bool> {
    let seed = a.output.seed;
    let lambda = a.lambda.unwrap_or(a.n as f64);
    let value = match a.kind {
        Kind::Market if !a.as_game => {
            let market = if a.separable {
                MarketGame::separable(a.n, a.d, lambda, seed)?
            } else {
                MarketGame::random_tables(a.n, a.d, lambda, seed)?
            };
            serde_json::to_value(market)?
        }
        kind => {
            let spec = match kind {
                Kind::Linear => GeneratorSpec::Linear { n: a.n, m: a.m, d: a.d, with_loss: a.with_loss },
                Kind::Threshold => GeneratorSpec::Threshold { n: a.n },
                Kind::Market => GeneratorSpec::Market { n: a.n, d: a.d, lambda, separable: a.separable },
                Kind::Anonymous => GeneratorSpec::Anonymous { n: a.n, m: a.m, with_loss: a.with_loss },
            };
            serde_json::from_str(&generate(&spec, seed)?.to_json()?)?
        }
    };
    a.output.write("gen-game", &value)?;
    Ok(false)
}

fn market_sim(a: &MarketArgs) -> Result<bool> {
    let market: MarketGame = read_json(&a.market)?;
    let market = MarketGame::new(market.d, market.lambda, market.valuations)?;
    let game = market.to_aggregative()?;
    let floor = existence_bound(game.n(), game.m(), game.gamma());
    let zeta = a.zeta.unwrap_or_else(|| market_zeta(market.n, market.d, market.lambda).max(floor));
    let spec = AlgorithmSpec::Presl {
        zeta: Some(zeta),
        epsilon: a.eps,
        delta: a.delta,
        beta: a.beta,
        alpha: a.alpha,
        e1: a.e1,
    };
    let r = run_algorithm(&spec, &game, &mut a.output.source())?;
    let market_report = match r.profile() {
        Some(x) => {
            let neutral = privmed::market::neutral_action(market.d);
            let trading = x.actions().iter().filter(|&&j| j != neutral).count();
            json!({
                "participation": trading as f64 / market.n as f64,
                "imbalance": market.imbalance(x)?,
                "prices": market.prices(x)?,
                "market_maker_loss": market.market_maker_loss(x)?,
                "loss_bound": market.lambda / 16.0,
            })
        }
        None => Value::Null,
    };
    let value = json!({
        "command": "market-sim",
        "arguments": a,
        "market": { "n": market.n, "d": market.d, "lambda": market.lambda },
        "result": r,
        "market_report": market_report,
    });
    a.output.write("market-sim", &value)?;
    Ok(r.outcome.is_abort())
}

fn distmw(a: &DistMwArgs) -> Result<bool> {
    let lp: FeasibilityLP = read_json(&a.lp)?;
    lp.validate()?;
    let params = DistMwParams::derive(lp.n, lp.m, lp.gamma, a.eps, a.delta, a.alpha, a.beta)?;
    let out = distmw_solve(&lp, &params, &mut a.output.source())?;
    let value = json!({
        "command": "distmw-solve",
        "arguments": a,
        "parameters": params,
        "result": out,
    });
    a.output.write("distmw-solve", &value)?;
    Ok(false)
}

fn verify(a: &VerifyArgs) -> Result<bool> {
    let game = AggregativeGame::load(&a.game)?;
    let x = load_profile(&a.profile)?;
    let regret = game.regret(&x)?;
    let value = json!({
        "command": "verify",
        "arguments": a,
        "profile": x,
        "aggregator": game.aggregator(&x)?,
        "loss": game.loss(&x)?,
        "regret": regret,
        "is_eta_nash": a.eta.map(|eta| regret.max <= eta),
    });
    a.output.write("verify", &value)?;
    Ok(false)
}

fn deviate(a: &DeviateArgs) -> Result<bool> {
    let game = AggregativeGame::load(&a.game)?;
    let misreport: PlayerType = read_json(&a.misreport)?;
    let spec = match a.algorithm {
        Mediator::Presl => AlgorithmSpec::Presl {
            zeta: a.zeta,
            epsilon: a.eps,
            delta: Some(a.delta.unwrap_or_else(|| default_delta(game.n()))),
            beta: a.beta,
            alpha: a.alpha,
            e1: None,
        },
        Mediator::Psummnash => AlgorithmSpec::Psummnash { epsilon: a.eps, alpha: a.alpha, beta: a.beta },
        Mediator::Select => AlgorithmSpec::Select {
            zeta: a.zeta,
            epsilon: a.eps,
            alpha: a.alpha,
            beta: a.beta,
            quality: Quality::identity(),
        },
    };
    check_spec(&spec, &game)?;
    let r = deviation_test(&spec, &game, a.player, &misreport, a.runs, a.output.seed, a.output.mode())?;
    let value = json!({ "command": "deviate", "arguments": a, "result": r });
    a.output.write("deviate", &value)?;
    Ok(false)
}

fn bench(a: &BenchArgs) -> Result<bool> {
    let mut config: ExperimentConfig = read_json(&a.config)?;
    config.timing |= a.timing;
    config.noise_off |= a.output.no_noise;
    let (_, summary) = run_experiment(&config)?;
    a.output.write("bench", &serde_json::to_value(summary)?)?;
    Ok(false)
}

fn dispatch(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::GenGame(a) => gen_game(a),
        Command::Presl(a) => {
            let spec = AlgorithmSpec::Presl {
                zeta: a.zeta,
                epsilon: a.eps,
                delta: a.delta,
                beta: a.beta,
                alpha: a.alpha,
                e1: a.e1,
            };
            run_spec("presl", a, &a.output, &a.game, spec)
        }
        Command::Npresl(a) => {
            let spec = AlgorithmSpec::Npresl { zeta: a.zeta, alpha: a.alpha, beta: a.beta };
            run_spec("npresl", a, &a.output, &a.game, spec)
        }
        Command::Psummnash(a) => {
            let spec = AlgorithmSpec::Psummnash { epsilon: a.eps, alpha: a.alpha, beta: a.beta };
            run_spec("psummnash", a, &a.output, &a.game, spec)
        }
        Command::Select(a) => {
            let spec = AlgorithmSpec::Select {
                zeta: a.zeta,
                epsilon: a.eps,
                alpha: a.alpha,
                beta: a.beta,
                quality: parse_quality(&a.quality)?,
            };
            run_spec("select", a, &a.output, &a.game, spec)
        }
        Command::MarketSim(a) => market_sim(a),
        Command::DistmwSolve(a) => distmw(a),
        Command::Verify(a) => verify(a),
        Command::Deviate(a) => deviate(a),
        Command::Bench(a) => bench(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            eprintln!("mechanism aborted");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
