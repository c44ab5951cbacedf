use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use timeshare::experiment::{default_friedman_gp, run_friedman, FriedmanConfig};
use timeshare::game::check_axioms;
use timeshare::incentives::check_all;
use timeshare::realization::{select_subset, temper};
use timeshare::report::{CheckReport, RealizationReport, RealizedParty, RewardReport, ShapleyReport};
use timeshare::synthdata::{gen_friedman, partition, train_test_split, Dataset, DEFAULT_FRIEDMAN_COUNT};
use timeshare::time_rewards::{scale_rewards, Cumulation, NaiveDivision, PlainShapley, RewardScheme, TimeValuation};
use timeshare::{shapley_exact, shapley_mc, Game, GameFile, GpConfig, Rational, Scalar, TimeVector};

/// Exit status when every check ran but some incentive or trend failed.
const EXIT_INCENTIVE_FAIL: u8 = 2;

#[derive(Parser)]
#[command(name = "timeshare", version, about = "Time-aware rewards for collaborative data sharing")]
struct Cli {
    /// Worker threads for parallel table evaluation.
    #[arg(long, global = true, env = "TIMESHARE_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute rewards for a game and check incentives F1–F8.
    Rewards(RewardArgs),
    /// Like `rewards`, and also report the game's axioms.
    Check(RewardArgs),
    /// Plain Shapley values, exact or sampled.
    Shapley(ShapleyArgs),
    /// Turn target rewards into models.
    #[command(subcommand)]
    Realize(RealizeCommand),
    /// Generate synthetic data.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Run an end-to-end experiment.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchemeName {
    Cumulation,
    Timeval,
    Naive,
    Shapley,
}

#[derive(Args)]
struct RewardArgs {
    /// Game JSON file.
    #[arg(long)]
    game: PathBuf,
    /// Joining times, e.g. `4,0`; overrides times stored in the game file.
    #[arg(long)]
    times: Option<String>,
    #[arg(long, value_enum)]
    scheme: SchemeName,
    /// Interval weight base, cumulation only.
    #[arg(long)]
    beta: Option<f64>,
    /// Time discount rate, timeval only.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Compute in exact rational arithmetic (not available for timeval).
    #[arg(long)]
    exact: bool,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ShapleyArgs {
    #[arg(long)]
    game: PathBuf,
    /// Sample this many permutations instead of enumerating coalitions.
    #[arg(long)]
    permutations: Option<usize>,
    #[arg(long, env = "TIMESHARE_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TargetArgs {
    /// Per-party target values, e.g. `1.5,2,0.7`.
    #[arg(long, conflicts_with = "rewards")]
    targets: Option<String>,
    /// Reward report whose scaled rewards are the targets.
    #[arg(long)]
    rewards: Option<PathBuf>,
}

#[derive(Subcommand)]
enum RealizeCommand {
    /// Likelihood tempering on a GP information-gain valuation.
    Temper {
        /// Dataset CSV with a party column.
        #[arg(long)]
        data: PathBuf,
        /// GP hyperparameter JSON.
        #[arg(long)]
        gp: PathBuf,
        #[command(flatten)]
        targets: TargetArgs,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Greedy subset selection over data points or game parties.
    Subset {
        /// Game JSON file; parties are the points.
        #[arg(long, conflicts_with_all = ["data", "gp"])]
        game: Option<PathBuf>,
        #[arg(long, requires = "gp")]
        data: Option<PathBuf>,
        #[arg(long, requires = "data")]
        gp: Option<PathBuf>,
        #[command(flatten)]
        targets: TargetArgs,
        #[arg(long, env = "TIMESHARE_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum GenCommand {
    /// Friedman regression data as CSV.
    Friedman {
        #[arg(long, default_value_t = DEFAULT_FRIEDMAN_COUNT)]
        count: usize,
        #[arg(long, default_value_t = 1.0)]
        noise_std: f64,
        #[arg(long, env = "TIMESHARE_SEED", default_value_t = 0)]
        seed: u64,
        /// Per-party sizes, e.g. `300,300,200`; rows are left unowned otherwise.
        #[arg(long)]
        sizes: Option<String>,
        /// Hold out 20% as a test set written to this path; parties are
        /// drawn from the remaining rows.
        #[arg(long)]
        test_out: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// Sweep party 1's joining time on Friedman data with three GP parties.
    Friedman {
        #[arg(long, env = "TIMESHARE_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_FRIEDMAN_COUNT)]
        count: usize,
        #[arg(long, default_value = "300,300,200")]
        sizes: String,
        #[arg(long, default_value = "0,1,2,3,4,5,6")]
        t1_grid: String,
        #[arg(long, default_value = "0.7,1,2,1000")]
        betas: String,
        #[arg(long, default_value = "0,0.5,1")]
        gammas: String,
        /// GP hyperparameter JSON; built-in defaults otherwise.
        #[arg(long)]
        gp: Option<PathBuf>,
        /// Realize every reward by tempering and score it on the test set.
        #[arg(long)]
        mnlp: bool,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Report JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Tidy plot-data CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn parse_list<T: std::str::FromStr>(list: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    list.split(',')
        .map(|s| s.trim().parse::<T>().map_err(|e| anyhow!("bad {what} {s:?}: {e}")))
        .collect()
}

/// Writes through a temporary file in the destination directory, then
/// renames it into place.
fn write_atomic(path: &Path, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating file in {}", dir.display()))?;
    write(tmp.as_file_mut())?;
    tmp.as_file_mut().flush()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(path) => write_atomic(path, |w| Ok(w.write_all(text.as_bytes())?)),
        None => Ok(std::io::stdout().write_all(text.as_bytes())?),
    }
}

fn load_dataset(path: &Path) -> Result<Dataset> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(Dataset::read_csv(BufReader::new(file))?)
}

fn scheme_for<S: Scalar>(args: &RewardArgs) -> Result<Box<dyn RewardScheme<S>>> {
    match (args.scheme, args.beta, args.gamma) {
        (SchemeName::Cumulation, Some(beta), None) => {
            let beta = S::from_f64(beta).ok_or_else(|| anyhow!("--beta must be finite"))?;
            Ok(Box::new(Cumulation { beta }))
        }
        (SchemeName::Cumulation, None, _) => bail!("--beta is required with --scheme cumulation"),
        (SchemeName::Naive, None, None) => Ok(Box::new(NaiveDivision)),
        (SchemeName::Shapley, None, None) => Ok(Box::new(PlainShapley)),
        (SchemeName::Timeval, _, _) => unreachable!("timeval is built separately"),
        (_, Some(_), _) => bail!("--beta only applies to --scheme cumulation"),
        (_, _, Some(_)) => bail!("--gamma only applies to --scheme timeval"),
    }
}

fn validate_scheme_flags(args: &RewardArgs) -> Result<()> {
    match args.scheme {
        SchemeName::Timeval => {
            if args.beta.is_some() {
                bail!("--beta only applies to --scheme cumulation");
            }
            let gamma = args.gamma.ok_or_else(|| anyhow!("--gamma is required with --scheme timeval"))?;
            if args.exact {
                bail!("--exact is not available for --scheme timeval");
            }
            if !(gamma >= 0.0) {
                bail!("--gamma must be non-negative");
            }
        }
        _ => {
            if args.gamma.is_some() {
                bail!("--gamma only applies to --scheme timeval");
            }
            if let (SchemeName::Cumulation, Some(beta)) = (args.scheme, args.beta) {
                if !(beta > 0.0) || !beta.is_finite() {
                    bail!("--beta must be positive and finite");
                }
            }
        }
    }
    if !(args.tol >= 0.0) {
        bail!("--tol must be non-negative");
    }
    Ok(())
}

fn reward_report_in<S: Scalar>(
    file: &GameFile,
    times: &TimeVector,
    scheme: &dyn RewardScheme<S>,
    tol: f64,
) -> Result<(RewardReport, Game<S>)> {
    let game: Game<S> = file.to_game()?;
    let tol = S::from_f64(tol).ok_or_else(|| anyhow!("--tol must be finite"))?;
    let rewards = scheme.rewards(&game, times)?;
    let scaled = scale_rewards(&game, rewards)?;
    let incentives = check_all(&game, times, scheme, &tol)?;
    let lossy = timeshare::ScaledRewards {
        rewards: timeshare::RewardVector {
            rewards: scaled.rewards.rewards.iter().map(|r| r.to_f64_lossy()).collect(),
            scaled: scaled.rewards.scaled.as_ref().map(|s| s.iter().map(|r| r.to_f64_lossy()).collect()),
        },
        rho: scaled.rho.as_ref().map(|r| r.to_f64_lossy()),
        degenerate: scaled.degenerate,
    };
    Ok((RewardReport::new(scheme.name(), scheme.param(), times, &lossy, incentives), game))
}

fn build_reward_report(args: &RewardArgs) -> Result<(RewardReport, GameFile)> {
    validate_scheme_flags(args)?;
    let file = GameFile::load(&args.game).with_context(|| format!("reading game {}", args.game.display()))?;
    let times = match &args.times {
        Some(list) => TimeVector::parse(list)?,
        None => file.time_vector()?.ok_or_else(|| anyhow!("no joining times: pass --times or add them to the game file"))?,
    };
    if times.len() != file.n {
        bail!("{} joining times given for {} parties", times.len(), file.n);
    }
    let report = if args.scheme == SchemeName::Timeval {
        let scheme = TimeValuation { gamma: args.gamma.expect("validated") };
        reward_report_in::<f64>(&file, &times, &scheme, args.tol)?.0
    } else if args.exact {
        let scheme = scheme_for::<Rational>(args)?;
        reward_report_in::<Rational>(&file, &times, scheme.as_ref(), args.tol)?.0
    } else {
        let scheme = scheme_for::<f64>(args)?;
        reward_report_in::<f64>(&file, &times, scheme.as_ref(), args.tol)?.0
    };
    Ok((report, file))
}

fn cmd_rewards(args: &RewardArgs) -> Result<ExitCode> {
    let (report, _) = build_reward_report(args)?;
    emit_json(&report, args.out.as_deref())?;
    Ok(exit_for(report.passed()))
}

fn cmd_check(args: &RewardArgs) -> Result<ExitCode> {
    let (rewards, file) = build_reward_report(args)?;
    let game: Game<f64> = file.to_game()?;
    let axioms = check_axioms(&game, args.tol)?;
    let passed = rewards.passed();
    emit_json(&CheckReport { axioms, rewards }, args.out.as_deref())?;
    Ok(exit_for(passed))
}

fn cmd_shapley(args: &ShapleyArgs) -> Result<ExitCode> {
    let file = GameFile::load(&args.game).with_context(|| format!("reading game {}", args.game.display()))?;
    let game: Game<f64> = file.to_game()?;
    let result = match args.permutations {
        Some(p) => shapley_mc(&game, p, args.seed)?,
        None => shapley_exact(&game)?,
    };
    emit_json(&ShapleyReport::new(&result, Some(args.seed)), args.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn load_targets(args: &TargetArgs, parties: usize) -> Result<Vec<f64>> {
    let targets = match (&args.targets, &args.rewards) {
        (Some(list), None) => parse_list::<f64>(list, "target")?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let report: RewardReport = serde_json::from_str(&text)?;
            report.scaled_rewards
        }
        _ => bail!("pass exactly one of --targets or --rewards"),
    };
    if targets.len() != parties {
        bail!("{} targets given for {parties} parties", targets.len());
    }
    Ok(targets)
}

fn cmd_realize(cmd: &RealizeCommand) -> Result<ExitCode> {
    match cmd {
        RealizeCommand::Temper { data, gp, targets, tol, out } => {
            let data = load_dataset(data)?;
            let model = GpConfig::load(gp)?.build_model(&data)?;
            let targets = load_targets(targets, model.parties())?;
            let parties = targets
                .iter()
                .enumerate()
                .map(|(i, &t)| Ok(RealizedParty::from(&temper(&model, i, t, *tol)?)))
                .collect::<Result<Vec<_>>>()?;
            emit_json(&RealizationReport { method: "temper".into(), seed: None, tol: *tol, parties }, out.as_deref())?;
        }
        RealizeCommand::Subset { game, data, gp, targets, seed, tol, out } => {
            let parties = if let Some(path) = game {
                let file = GameFile::load(path).with_context(|| format!("reading game {}", path.display()))?;
                let game: Game<f64> = file.to_game()?;
                let targets = load_targets(targets, game.n())?;
                targets
                    .iter()
                    .enumerate()
                    .map(|(i, &t)| {
                        let mut r = RealizedParty::from(&select_subset(&game, i, t, *seed, *tol)?);
                        // points are parties here, reported 1-based
                        r.selected = r.selected.map(|s| s.into_iter().map(|p| p + 1).collect());
                        Ok(r)
                    })
                    .collect::<Result<Vec<_>>>()?
            } else {
                let (Some(data), Some(gp)) = (data, gp) else {
                    bail!("pass --game, or --data together with --gp");
                };
                let data = load_dataset(data)?;
                let model = GpConfig::load(gp)?.build_model(&data)?;
                // model points are the owned rows in file order
                let rows: Vec<usize> = (0..data.len()).filter(|&r| data.party[r].is_some()).collect();
                let targets = load_targets(targets, model.parties())?;
                targets
                    .iter()
                    .enumerate()
                    .map(|(i, &t)| {
                        let mut r = RealizedParty::from(&select_subset(&model, i, t, *seed, *tol)?);
                        r.selected = r.selected.map(|s| s.into_iter().map(|p| rows[p]).collect());
                        Ok(r)
                    })
                    .collect::<Result<Vec<_>>>()?
            };
            emit_json(&RealizationReport { method: "subset".into(), seed: Some(*seed), tol: *tol, parties }, out.as_deref())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_gen(cmd: &GenCommand) -> Result<ExitCode> {
    let GenCommand::Friedman { count, noise_std, seed, sizes, test_out, out } = cmd;
    let mut data = gen_friedman(*count, *noise_std, *seed)?;
    if let Some(test_path) = test_out {
        let (train, test) = train_test_split(&data, 0.2, seed.wrapping_add(1))?;
        write_atomic(test_path, |w| Ok(test.write_csv(w)?))?;
        data = train;
    }
    if let Some(sizes) = sizes {
        data = partition(&data, &parse_list::<usize>(sizes, "size")?, seed.wrapping_add(2))?;
    }
    match out {
        Some(path) => write_atomic(path, |w| Ok(data.write_csv(w)?))?,
        None => data.write_csv(std::io::stdout().lock())?,
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_experiment(cmd: &ExperimentCommand) -> Result<ExitCode> {
    let ExperimentCommand::Friedman { seed, count, sizes, t1_grid, betas, gammas, gp, mnlp, tol, out, csv } = cmd;
    let config = FriedmanConfig {
        count: *count,
        sizes: parse_list(sizes, "size")?,
        seed: *seed,
        t1_grid: parse_list(t1_grid, "joining time")?,
        betas: parse_list(betas, "beta")?,
        gammas: parse_list(gammas, "gamma")?,
        gp: match gp {
            Some(path) => GpConfig::load(path)?,
            None => default_friedman_gp(),
        },
        mnlp: *mnlp,
        tol: *tol,
        ..FriedmanConfig::default()
    };
    if config.betas.iter().any(|b| !(*b > 0.0)) || config.gammas.iter().any(|g| !(*g >= 0.0)) {
        bail!("betas must be positive and gammas non-negative");
    }
    let report = run_friedman(&config)?;
    if let Some(path) = csv {
        write_atomic(path, |w| Ok(report.write_csv(w)?))?;
    }
    for check in &report.checks {
        eprintln!("{} {}: {}", if check.passed { "PASS" } else { "FAIL" }, check.name, check.detail);
    }
    emit_json(&report, out.as_deref())?;
    Ok(exit_for(report.passed()))
}

fn exit_for(passed: bool) -> ExitCode {
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_INCENTIVE_FAIL)
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    match &cli.command {
        Command::Rewards(args) => cmd_rewards(args),
        Command::Check(args) => cmd_check(args),
        Command::Shapley(args) => cmd_shapley(args),
        Command::Realize(cmd) => cmd_realize(cmd),
        Command::Gen(cmd) => cmd_gen(cmd),
        Command::Experiment(cmd) => cmd_experiment(cmd),
    }
}

fn main() -> ExitCode {
    // clap's own usage exit code would collide with the incentive failure code
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
