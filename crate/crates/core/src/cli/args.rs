use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use super::CliError;
use crate::algorithm::{AlgorithmKind, DEFAULT_ITERATION_CAP};
use crate::drift::PotentialKind;
use crate::experiment::{ScalingModel, StartPolicy, TargetPolicy};
use crate::space::MetricKind;
use crate::step::StepOperatorKind;
use crate::token::StepLaw;

#[derive(Debug, Parser)]
#[command(
    name = "rvalued",
    version,
    about = "Run time experiments for RLS and the (1+1) EA on r-valued OneMax",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Replicated optimization runs over an (n, r) grid; one row per cell.
    Run(RunArgs),
    /// Empirical one-step drift of a potential, bucketed by level.
    Drift(DriftArgs),
    /// Token process: Monte-Carlo hitting times next to the exact expectation.
    Token(TokenArgs),
    /// Least-squares fit of a scaling model to `run` output.
    Fit(FitArgs),
    /// Print the harmonic step-size distribution over {1, ..., r-1}.
    Pmf(PmfArgs),
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Output format.
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    /// Write results to this file instead of standard output.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SearchArgs {
    /// Flat TOML plan file; flags given on the command line take precedence.
    #[arg(long, value_name = "PATH")]
    plan: Option<PathBuf>,
    /// Problem dimension; a comma-separated list spans a grid.
    #[arg(long, value_delimiter = ',', value_name = "N")]
    n: Vec<usize>,
    /// Alphabet size, at least 2; a comma-separated list spans a grid.
    #[arg(long, value_delimiter = ',', value_name = "R")]
    r: Vec<u64>,
    /// Algorithm: rls or ea (comma-separated list allowed).
    #[arg(long, value_delimiter = ',', value_name = "ALGO")]
    algo: Vec<AlgorithmKind>,
    /// Step operator: uniform, pm1 or harmonic (comma-separated list allowed).
    #[arg(long, value_delimiter = ',', value_name = "OP")]
    op: Vec<StepOperatorKind>,
    /// Metric: interval or ring.
    #[arg(long)]
    metric: Option<MetricKind>,
    /// Seed for all randomness (required, here or in the plan file).
    #[arg(long)]
    seed: Option<u64>,
    /// Per-run iteration cap [default: 10^10].
    #[arg(long)]
    cap: Option<u64>,
    /// Target: zero, center or random (fresh per replicate).
    #[arg(long, value_parser = parse_target)]
    target: Option<TargetPolicy>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    search: SearchArgs,
    /// Replicates per cell.
    #[arg(long)]
    reps: Option<usize>,
    /// Start point: uniform, max, or hamming:K.
    #[arg(long, value_parser = parse_start)]
    start: Option<StartPolicy>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct DriftArgs {
    #[command(flatten)]
    search: SearchArgs,
    /// Potential: hamming, fitness, exp or exp:W.
    #[arg(long)]
    potential: Option<PotentialKind>,
    /// Planted Hamming levels (comma-separated); without it the visited
    /// states of restarted runs are used.
    #[arg(long, value_delimiter = ',', value_name = "K")]
    levels: Vec<usize>,
    /// Samples per planted level, or the total for visited states.
    #[arg(long)]
    samples: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct TokenArgs {
    /// Flat TOML plan file; flags given on the command line take precedence.
    #[arg(long, value_name = "PATH")]
    plan: Option<PathBuf>,
    /// Largest token position (comma-separated list allowed).
    #[arg(long, value_delimiter = ',', value_name = "R")]
    r: Vec<u64>,
    /// Step law: unit, uniform or harmonic (comma-separated list allowed).
    #[arg(long, value_delimiter = ',', value_name = "LAW")]
    law: Vec<StepLaw>,
    /// Monte-Carlo runs per (r, law).
    #[arg(long)]
    runs: Option<u64>,
    /// Seed for all randomness (required, here or in the plan file).
    #[arg(long)]
    seed: Option<u64>,
    /// Per-run iteration cap.
    #[arg(long)]
    cap: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Results written by `run` (CSV or JSON).
    #[arg(long, value_name = "PATH")]
    input: PathBuf,
    /// Model: uniform-leading, unit-strength, harmonic-strength, log-squared
    /// or linear-r.
    #[arg(long)]
    model: ScalingModel,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct PmfArgs {
    /// Alphabet size, at least 2.
    #[arg(long)]
    r: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

fn parse_target(s: &str) -> Result<TargetPolicy, String> {
    match s {
        "zero" => Ok(TargetPolicy::AllZero),
        "center" => Ok(TargetPolicy::Center),
        "random" => Ok(TargetPolicy::UniformRandomPerReplicate),
        _ => Err(format!(
            "unknown target `{s}` (expected zero, center or random)"
        )),
    }
}

fn parse_start(s: &str) -> Result<StartPolicy, String> {
    match s {
        "uniform" => Ok(StartPolicy::UniformRandom),
        "max" => Ok(StartPolicy::AllMaxDistance),
        _ => match s.strip_prefix("hamming:") {
            Some(k) => k
                .parse()
                .map(StartPolicy::FixedHamming)
                .map_err(|_| format!("malformed Hamming level in `{s}`")),
            None => Err(format!(
                "unknown start `{s}` (expected uniform, max or hamming:K)"
            )),
        },
    }
}

/// Grid and run settings shared by `run` and `drift`.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSettings {
    pub n: Vec<usize>,
    pub r: Vec<u64>,
    pub algorithms: Vec<AlgorithmKind>,
    pub operators: Vec<StepOperatorKind>,
    pub metric: MetricKind,
    pub seed: u64,
    /// Per-run iteration cap, defaulting to [`DEFAULT_ITERATION_CAP`].
    pub cap: Option<u64>,
    pub target: TargetPolicy,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    Run {
        search: SearchSettings,
        replicates: usize,
        start: StartPolicy,
    },
    Drift {
        search: SearchSettings,
        potential: PotentialKind,
        levels: Vec<usize>,
        samples: u64,
    },
    Token {
        r: Vec<u64>,
        laws: Vec<StepLaw>,
        runs: u64,
        seed: u64,
        cap: Option<u64>,
    },
    Fit {
        input: PathBuf,
        model: ScalingModel,
    },
    Pmf {
        r: u64,
    },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Run { .. } => "run",
            Task::Drift { .. } => "drift",
            Task::Token { .. } => "token",
            Task::Fit { .. } => "fit",
            Task::Pmf { .. } => "pmf",
        }
    }
}

/// Fully resolved command line.
#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub task: Task,
    pub plan_file: Option<PathBuf>,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

/// A scalar or a list in a plan file.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanFile {
    n: Option<OneOrMany<usize>>,
    r: Option<OneOrMany<u64>>,
    algo: Option<OneOrMany<String>>,
    op: Option<OneOrMany<String>>,
    metric: Option<String>,
    reps: Option<usize>,
    seed: Option<u64>,
    cap: Option<u64>,
    target: Option<String>,
    start: Option<String>,
    potential: Option<String>,
    levels: Option<Vec<usize>>,
    samples: Option<u64>,
    law: Option<OneOrMany<String>>,
    runs: Option<u64>,
}

impl PlanFile {
    fn load(path: &Option<PathBuf>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read plan {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("plan {}: {}", path.display(), e.message())))
    }

    /// Rejects keys that the subcommand does not use.
    fn check_keys(&self, command: &str, allowed: &[&str]) -> Result<(), CliError> {
        let present = [
            ("n", self.n.is_some()),
            ("r", self.r.is_some()),
            ("algo", self.algo.is_some()),
            ("op", self.op.is_some()),
            ("metric", self.metric.is_some()),
            ("reps", self.reps.is_some()),
            ("seed", self.seed.is_some()),
            ("cap", self.cap.is_some()),
            ("target", self.target.is_some()),
            ("start", self.start.is_some()),
            ("potential", self.potential.is_some()),
            ("levels", self.levels.is_some()),
            ("samples", self.samples.is_some()),
            ("law", self.law.is_some()),
            ("runs", self.runs.is_some()),
        ];
        for (key, set) in present {
            if set && !allowed.contains(&key) {
                return Err(CliError::Usage(format!(
                    "plan key `{key}` does not apply to `{command}`"
                )));
            }
        }
        Ok(())
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, values: Vec<String>) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    values
        .iter()
        .map(|v| {
            v.parse()
                .map_err(|e| CliError::Usage(format!("plan key `{key}`: {e}")))
        })
        .collect()
}

fn pick<T>(flag: Vec<T>, file: Option<Vec<T>>, default: Vec<T>) -> Vec<T> {
    if !flag.is_empty() {
        flag
    } else {
        file.unwrap_or(default)
    }
}

fn require<T>(value: Option<T>, flag: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Usage(format!("missing required flag --{flag}")))
}

fn check_r(values: &[u64]) -> Result<(), CliError> {
    if values.iter().any(|&r| r < 2) {
        return Err(CliError::Usage("r must be ≥ 2".into()));
    }
    Ok(())
}

fn non_empty<T>(values: &[T], flag: &str) -> Result<(), CliError> {
    if values.is_empty() {
        return Err(CliError::Usage(format!("missing required flag --{flag}")));
    }
    Ok(())
}

const SEARCH_KEYS: [&str; 8] = ["n", "r", "algo", "op", "metric", "seed", "cap", "target"];

fn resolve_search(args: SearchArgs, file: &mut PlanFile) -> Result<SearchSettings, CliError> {
    let n = pick(args.n, file.n.take().map(OneOrMany::into_vec), vec![]);
    let r = pick(args.r, file.r.take().map(OneOrMany::into_vec), vec![]);
    let algorithms = match file.algo.take() {
        Some(v) if args.algo.is_empty() => parse_list("algo", v.into_vec())?,
        _ => pick(args.algo, None, vec![AlgorithmKind::Rls]),
    };
    let operators = match file.op.take() {
        Some(v) if args.op.is_empty() => parse_list("op", v.into_vec())?,
        _ => pick(args.op, None, vec![StepOperatorKind::Uniform]),
    };
    let metric = match (args.metric, file.metric.take()) {
        (Some(m), _) => m,
        (None, Some(s)) => s
            .parse()
            .map_err(|e| CliError::Usage(format!("plan key `metric`: {e}")))?,
        (None, None) => MetricKind::Interval,
    };
    let target = match (args.target, file.target.take()) {
        (Some(t), _) => t,
        (None, Some(s)) => parse_target(&s).map_err(CliError::Usage)?,
        (None, None) => TargetPolicy::AllZero,
    };
    non_empty(&n, "n")?;
    non_empty(&r, "r")?;
    check_r(&r)?;
    if n.contains(&0) {
        return Err(CliError::Usage("n must be ≥ 1".into()));
    }
    let cap = args.cap.or(file.cap);
    if cap == Some(0) {
        return Err(CliError::Usage("--cap must be positive".into()));
    }
    Ok(SearchSettings {
        n,
        r,
        algorithms,
        operators,
        metric,
        seed: require(args.seed.or(file.seed), "seed")?,
        cap: cap.or(Some(DEFAULT_ITERATION_CAP)),
        target,
    })
}

/// Parses `argv` (including the program name) into a resolved configuration,
/// reading the plan file if one is given.
pub fn parse_args<I, T>(argv: I) -> Result<CliConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| {
        use clap::error::ErrorKind;
        match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                CliError::Help(e.render().to_string())
            }
            ErrorKind::MissingSubcommand | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                CliError::Usage(e.render().to_string())
            }
            _ => CliError::Usage(e.render().to_string()),
        }
    })?;

    match cli.command {
        Command::Run(a) => {
            check_r(&a.search.r)?;
            let plan_file = a.search.plan.clone();
            let threads = a.search.threads;
            let mut file = PlanFile::load(&plan_file)?;
            let mut keys = SEARCH_KEYS.to_vec();
            keys.extend(["reps", "start"]);
            file.check_keys("run", &keys)?;
            let replicates = require(a.reps.or(file.reps), "reps")?;
            if replicates == 0 {
                return Err(CliError::Usage("--reps must be ≥ 1".into()));
            }
            let start = match (a.start, file.start.take()) {
                (Some(s), _) => s,
                (None, Some(s)) => parse_start(&s).map_err(CliError::Usage)?,
                (None, None) => StartPolicy::UniformRandom,
            };
            let search = resolve_search(a.search, &mut file)?;
            if let StartPolicy::FixedHamming(k) = start {
                if let Some(&n) = search.n.iter().find(|&&n| k > n) {
                    return Err(CliError::Usage(format!(
                        "--start hamming:{k} exceeds n = {n}"
                    )));
                }
            }
            Ok(CliConfig {
                task: Task::Run {
                    search,
                    replicates,
                    start,
                },
                plan_file,
                format: a.output.format,
                out: a.output.out,
                threads,
            })
        }
        Command::Drift(a) => {
            check_r(&a.search.r)?;
            let plan_file = a.search.plan.clone();
            let threads = a.search.threads;
            let mut file = PlanFile::load(&plan_file)?;
            let mut keys = SEARCH_KEYS.to_vec();
            keys.extend(["potential", "levels", "samples"]);
            file.check_keys("drift", &keys)?;
            let potential = match (a.potential, file.potential.take()) {
                (Some(p), _) => p,
                (None, Some(s)) => s
                    .parse()
                    .map_err(|e| CliError::Usage(format!("plan key `potential`: {e}")))?,
                (None, None) => PotentialKind::HammingToTarget,
            };
            potential
                .validate()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let levels = pick(a.levels, file.levels.take(), vec![]);
            let samples = a.samples.or(file.samples).unwrap_or(10_000);
            let search = resolve_search(a.search, &mut file)?;
            if let Some(&k) = levels.iter().find(|&&k| search.n.iter().any(|&n| k > n)) {
                return Err(CliError::Usage(format!("--levels {k} exceeds n")));
            }
            Ok(CliConfig {
                task: Task::Drift {
                    search,
                    potential,
                    levels,
                    samples,
                },
                plan_file,
                format: a.output.format,
                out: a.output.out,
                threads,
            })
        }
        Command::Token(a) => {
            check_r(&a.r)?;
            let mut file = PlanFile::load(&a.plan)?;
            file.check_keys("token", &["r", "law", "runs", "seed", "cap"])?;
            let r = pick(a.r, file.r.take().map(OneOrMany::into_vec), vec![]);
            non_empty(&r, "r")?;
            check_r(&r)?;
            let laws = match file.law.take() {
                Some(v) if a.law.is_empty() => parse_list("law", v.into_vec())?,
                _ => pick(a.law, None, vec![StepLaw::Harmonic]),
            };
            if laws.iter().any(|l| matches!(l, StepLaw::Explicit(_))) {
                return Err(CliError::Usage(
                    "--law must be unit, uniform or harmonic".into(),
                ));
            }
            let runs = a.runs.or(file.runs).unwrap_or(10_000);
            if runs == 0 {
                return Err(CliError::Usage("--runs must be ≥ 1".into()));
            }
            let cap = a.cap.or(file.cap);
            if cap == Some(0) {
                return Err(CliError::Usage("--cap must be positive".into()));
            }
            Ok(CliConfig {
                task: Task::Token {
                    r,
                    laws,
                    runs,
                    seed: require(a.seed.or(file.seed), "seed")?,
                    cap,
                },
                plan_file: a.plan,
                format: a.output.format,
                out: a.output.out,
                threads: a.threads,
            })
        }
        Command::Fit(a) => Ok(CliConfig {
            task: Task::Fit {
                input: a.input,
                model: a.model,
            },
            plan_file: None,
            format: a.output.format,
            out: a.output.out,
            threads: None,
        }),
        Command::Pmf(a) => {
            check_r(&[a.r])?;
            Ok(CliConfig {
                task: Task::Pmf { r: a.r },
                plan_file: None,
                format: a.output.format,
                out: a.output.out,
                threads: None,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<CliConfig, CliError> {
        parse_args(std::iter::once("rvalued").chain(args.iter().copied()))
    }

    #[test]
    fn run_example_maps_directly() {
        let cfg = parse(&[
            "run", "--n", "20", "--r", "4", "--algo", "rls", "--op", "uniform", "--metric",
            "interval", "--reps", "2000", "--seed", "42",
        ])
        .unwrap();
        let Task::Run {
            search,
            replicates,
            start,
        } = cfg.task
        else {
            panic!("expected run");
        };
        assert_eq!(search.n, vec![20]);
        assert_eq!(search.r, vec![4]);
        assert_eq!(search.algorithms, vec![AlgorithmKind::Rls]);
        assert_eq!(search.operators, vec![StepOperatorKind::Uniform]);
        assert_eq!(search.metric, MetricKind::Interval);
        assert_eq!(search.seed, 42);
        assert_eq!(replicates, 2000);
        assert_eq!(start, StartPolicy::UniformRandom);
        assert_eq!(cfg.format, OutputFormat::Csv);
    }

    #[test]
    fn small_r_is_rejected() {
        match parse(&["run", "--r", "1"]) {
            Err(CliError::Usage(m)) => assert!(m.contains("r must be ≥ 2"), "{m}"),
            other => panic!("{other:?}"),
        }
        match parse(&["pmf", "--r", "1"]) {
            Err(CliError::Usage(m)) => assert!(m.contains("r must be ≥ 2")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn seed_is_required() {
        match parse(&["run", "--n", "5", "--r", "3", "--reps", "2"]) {
            Err(CliError::Usage(m)) => assert!(m.contains("--seed")),
            other => panic!("{other:?}"),
        }
        assert!(parse(&["token", "--r", "7"]).is_err());
    }

    #[test]
    fn usage_errors() {
        for bad in [
            vec!["run", "--bogus"],
            vec!["run", "--n", "x", "--r", "3", "--reps", "1", "--seed", "1"],
            vec!["pmf", "--r", "4", "--seed", "1"],
            vec![
                "run",
                "--n",
                "3",
                "--r",
                "3",
                "--reps",
                "1",
                "--seed",
                "1",
                "--start",
                "hamming:4",
            ],
            vec!["token", "--r", "7", "--seed", "1", "--levels", "2"],
            vec![],
        ] {
            assert!(matches!(parse(&bad), Err(CliError::Usage(_))), "{bad:?}");
        }
    }

    #[test]
    fn help_is_not_an_error() {
        assert!(matches!(parse(&["--help"]), Err(CliError::Help(_))));
        assert!(matches!(parse(&["run", "--help"]), Err(CliError::Help(_))));
    }

    #[test]
    fn plan_file_with_inline_override() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plan.toml");
        fs::write(
            &path,
            "n = [50, 100]\nr = [3, 5, 9]\nalgo = \"ea\"\nop = [\"uniform\", \"harmonic\"]\nreps = 7\nseed = 9\nstart = \"hamming:2\"\n",
        )
        .unwrap();
        let p = path.to_str().unwrap();
        let cfg = parse(&["run", "--plan", p, "--seed", "11", "--r", "4"]).unwrap();
        let Task::Run {
            search,
            replicates,
            start,
        } = cfg.task
        else {
            panic!()
        };
        assert_eq!(search.n, vec![50, 100]);
        assert_eq!(search.r, vec![4]);
        assert_eq!(search.algorithms, vec![AlgorithmKind::OnePlusOneEa]);
        assert_eq!(
            search.operators,
            vec![StepOperatorKind::Uniform, StepOperatorKind::Harmonic]
        );
        assert_eq!(search.seed, 11);
        assert_eq!(replicates, 7);
        assert_eq!(start, StartPolicy::FixedHamming(2));

        fs::write(&path, "n = 5\nr = 3\nseed = 1\nreps = 1\nruns = 4\n").unwrap();
        assert!(matches!(
            parse(&["run", "--plan", p]),
            Err(CliError::Usage(_))
        ));
        fs::write(&path, "n = 5\nbogus = 1\n").unwrap();
        assert!(matches!(
            parse(&["run", "--plan", p]),
            Err(CliError::Usage(_))
        ));
        let missing = dir.path().join("missing.toml");
        assert!(matches!(
            parse(&["run", "--plan", missing.to_str().unwrap()]),
            Err(CliError::Io(_))
        ));
    }
}
