//! Simulation toolkit for randomized search heuristics on r-valued OneMax
//! functions.
//!
//! - [`space`]: the search space `[r]^n`, interval and ring metrics, fitness.
//! - [`step`]: uniform, `±1` and harmonic elementary step operators.
//! - [`algorithm`]: RLS and the (1+1) EA, single runs and seeded batches.
//! - [`drift`]: potentials, empirical drift, hitting-time bound calculators.
//! - [`token`]: the one-dimensional token process and its exact oracle.
//! - [`experiment`]: grid studies and scaling-law fits.
//! - [`cli`]: the `rvalued` command-line front end.

pub mod algorithm;
pub mod cli;
pub mod drift;
pub mod error;
pub mod experiment;
pub mod numfmt;
pub mod space;
pub mod stats;
pub mod step;
pub mod token;

pub use algorithm::{
    run, run_batch, run_observed, sub_seed, AlgorithmKind, RunConfig, RunRecord, Selection,
};
pub use error::{Error, Result};
pub use space::{
    fitness, hamming_distance, metric_distance, sample_uniform_point, MetricKind, ProblemInstance,
    SpaceParams, ValueVector,
};
pub use step::{harmonic_pmf, step, HarmonicTable, StepOperator, StepOperatorKind};
