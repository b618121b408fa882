//! The `rvalued` command line: argument parsing, plan execution and result
//! writers.
//!
//! Exit status: 0 success, 1 usage error, 2 I/O error, 3 capacity error.

mod args;
mod emit;

use std::ffi::OsString;
use std::fs;
use std::path::Path;

pub use args::{parse_args, CliConfig, OutputFormat, SearchSettings, Task};
pub use emit::{emit_results, render, DriftRow, FitRow, PmfRow, ResultRow, TokenRow};

use crate::algorithm::{rng_from_seed, sub_seed, RunConfig};
use crate::drift::{estimate_drift, Conditioning};
use crate::error::Error;
use crate::experiment::{execute_plan, fit_scaling, AggregateResult, ExperimentPlan, TargetPolicy};
use crate::space::{sample_uniform_point, ProblemInstance, SpaceParams, ValueVector};
use crate::step::harmonic_pmf;
use crate::token::{
    token_expected_hitting_time_exact, token_monte_carlo, TokenConfig, MAX_EXACT_TOKEN_R,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    /// `--help` or `--version` output; not a failure.
    #[error("{0}")]
    Help(String),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Capacity(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Help(_) => 0,
            CliError::Usage(_) | CliError::Failed(_) => 1,
            CliError::Io(_) => 2,
            CliError::Capacity(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_) => CliError::Usage(e.to_string()),
            Error::Capacity(_) => CliError::Capacity(e.to_string()),
            Error::Degenerate(_) | Error::Divergent(_) => CliError::Failed(e.to_string()),
        }
    }
}

/// Entry point used by the binary; returns the process exit status.
pub fn main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let result = parse_args(argv).and_then(|cfg| execute(&cfg));
    match result {
        Ok(()) => 0,
        Err(CliError::Help(text)) => {
            print!("{text}");
            0
        }
        Err(e) => {
            let text = e.to_string();
            if text.starts_with("error:") {
                eprint!("{text}");
                if !text.ends_with('\n') {
                    eprintln!();
                }
            } else {
                eprintln!("error: {text}");
            }
            e.exit_code()
        }
    }
}

/// Runs a parsed configuration and writes its results.
pub fn execute(cfg: &CliConfig) -> Result<(), CliError> {
    match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| CliError::Failed(format!("thread pool: {e}")))?
            .install(|| dispatch(cfg)),
        None => dispatch(cfg),
    }
}

fn dispatch(cfg: &CliConfig) -> Result<(), CliError> {
    let out = cfg.out.as_deref();
    match &cfg.task {
        Task::Run {
            search,
            replicates,
            start,
        } => {
            let plan = ExperimentPlan {
                grid: grid(search),
                algorithms: search.algorithms.clone(),
                operators: search.operators.clone(),
                metric: search.metric,
                target_policy: search.target,
                start_policy: *start,
                replicates: *replicates,
                base_seed: search.seed,
                iteration_cap: search.cap,
            };
            eprintln!(
                "running {} cell(s) x {} replicate(s)",
                plan.cell_count(),
                plan.replicates
            );
            emit_results(&execute_plan(&plan)?, cfg.format, out)
        }
        Task::Drift {
            search,
            potential,
            levels,
            samples,
        } => {
            let mut rows = Vec::new();
            let mut cell = 0u64;
            for (n, r) in grid(search) {
                for &algorithm in &search.algorithms {
                    for &operator in &search.operators {
                        let seed = sub_seed(search.seed, cell);
                        cell += 1;
                        let params = SpaceParams::new(n, r)?;
                        let target = cell_target(&params, search.target, seed)?;
                        let instance = ProblemInstance::new(params, search.metric, target)?;
                        let config = RunConfig::new(algorithm, operator, instance, seed)
                            .with_cap(search.cap);
                        let conditioning = if levels.is_empty() {
                            Conditioning::Visited
                        } else {
                            Conditioning::PlantedHamming(levels.clone())
                        };
                        for est in estimate_drift(&config, *potential, &conditioning, *samples)? {
                            rows.push(DriftRow {
                                n,
                                r,
                                algorithm: algorithm.to_string(),
                                operator: operator.to_string(),
                                metric: search.metric.to_string(),
                                potential: potential.to_string(),
                                level: est.level.to_string(),
                                mean_drop: est.mean_drop,
                                ci_halfwidth: est.confidence_halfwidth,
                                samples: est.samples,
                            });
                        }
                    }
                }
            }
            emit_results(&rows, cfg.format, out)
        }
        Task::Token {
            r,
            laws,
            runs,
            seed,
            cap,
        } => {
            let mut rows = Vec::new();
            for &r in r {
                for law in laws {
                    let mut config =
                        TokenConfig::new(r, law.clone(), sub_seed(*seed, rows.len() as u64));
                    if let Some(c) = cap {
                        config.iteration_cap = *c;
                    }
                    let summary = token_monte_carlo(&config, *runs)?;
                    let exact = if r <= MAX_EXACT_TOKEN_R {
                        token_expected_hitting_time_exact(r, law)?
                    } else {
                        f64::NAN
                    };
                    rows.push(TokenRow {
                        r,
                        law: law.to_string(),
                        mean: summary.mean,
                        std_error: summary.std_error,
                        exact,
                        runs: summary.runs,
                        capped: summary.capped,
                    });
                }
            }
            emit_results(&rows, cfg.format, out)
        }
        Task::Fit { input, model } => {
            let results = read_aggregates(input)?;
            let fit = fit_scaling(&results, *model)?;
            let rows: Vec<FitRow> = fit
                .terms
                .iter()
                .zip(&fit.fitted_coefficients)
                .map(|(term, &coefficient)| FitRow {
                    model: model.to_string(),
                    term: term.to_string(),
                    coefficient,
                    r_squared: fit.r_squared,
                })
                .collect();
            emit_results(&rows, cfg.format, out)
        }
        Task::Pmf { r } => {
            let rows: Vec<PmfRow> = harmonic_pmf(*r)?
                .into_iter()
                .enumerate()
                .map(|(i, probability)| PmfRow {
                    j: i as u64 + 1,
                    probability,
                })
                .collect();
            emit_results(&rows, cfg.format, out)
        }
    }
}

fn grid(search: &SearchSettings) -> Vec<(usize, u64)> {
    search
        .n
        .iter()
        .flat_map(|&n| search.r.iter().map(move |&r| (n, r)))
        .collect()
}

fn cell_target(
    params: &SpaceParams,
    policy: TargetPolicy,
    seed: u64,
) -> Result<ValueVector, Error> {
    match policy {
        TargetPolicy::AllZero => ValueVector::filled(params, 0),
        TargetPolicy::Center => ValueVector::filled(params, params.r() / 2),
        TargetPolicy::UniformRandomPerReplicate => {
            Ok(sample_uniform_point(params, &mut rng_from_seed(seed)))
        }
    }
}

/// Reads `run` output in either format; JSON is recognized by a leading `[`.
fn read_aggregates(path: &Path) -> Result<Vec<AggregateResult>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    let bad = |e: String| CliError::Usage(format!("{}: {e}", path.display()));
    if text.trim_start().starts_with('[') {
        serde_json::from_str(&text).map_err(|e| bad(e.to_string()))
    } else {
        csv::Reader::from_reader(text.as_bytes())
            .deserialize()
            .collect::<Result<_, _>>()
            .map_err(|e| bad(e.to_string()))
    }
}
