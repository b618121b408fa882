use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithm::{drive, rng_from_seed, sub_seed, AlgorithmKind, Searcher, Selection};
use crate::error::{domain, Result};
use crate::space::{
    corrupt_target, farthest_point, sample_uniform_point, MetricKind, ProblemInstance, SpaceParams,
    ValueVector,
};
use crate::step::StepOperatorKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetPolicy {
    /// `z = (0, ..., 0)`.
    AllZero,
    /// `z = (floor(r/2), ..., floor(r/2))`.
    Center,
    /// A fresh uniform target for every replicate.
    UniformRandomPerReplicate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartPolicy {
    UniformRandom,
    /// Exactly `k` positions of the target corrupted to uniform wrong values.
    FixedHamming(usize),
    /// Every component as far from the target as the metric allows.
    AllMaxDistance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    /// `(n, r)` cells.
    pub grid: Vec<(usize, u64)>,
    pub algorithms: Vec<AlgorithmKind>,
    pub operators: Vec<StepOperatorKind>,
    pub metric: MetricKind,
    pub target_policy: TargetPolicy,
    pub start_policy: StartPolicy,
    pub replicates: usize,
    pub base_seed: u64,
    /// Per-run iteration cap; `None` is unlimited.
    pub iteration_cap: Option<u64>,
}

impl ExperimentPlan {
    pub fn single(
        n: usize,
        r: u64,
        algorithm: AlgorithmKind,
        operator: StepOperatorKind,
        metric: MetricKind,
        replicates: usize,
        base_seed: u64,
    ) -> Self {
        Self {
            grid: vec![(n, r)],
            algorithms: vec![algorithm],
            operators: vec![operator],
            metric,
            target_policy: TargetPolicy::AllZero,
            start_policy: StartPolicy::UniformRandom,
            replicates,
            base_seed,
            iteration_cap: Some(crate::algorithm::DEFAULT_ITERATION_CAP),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return domain("plan grid is empty");
        }
        if self.algorithms.is_empty() || self.operators.is_empty() {
            return domain("plan needs at least one algorithm and one operator");
        }
        if self.replicates == 0 {
            return domain("replicates must be >= 1");
        }
        if self.iteration_cap == Some(0) {
            return domain("iteration cap must be positive");
        }
        for &(n, r) in &self.grid {
            SpaceParams::new(n, r)?;
            if let StartPolicy::FixedHamming(k) = self.start_policy {
                if k > n {
                    return domain(format!("FixedHamming({k}) exceeds n = {n}"));
                }
            }
        }
        Ok(())
    }

    /// Number of aggregates `execute_plan` returns.
    pub fn cell_count(&self) -> usize {
        self.grid.len() * self.algorithms.len() * self.operators.len()
    }
}

/// Summary of one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub n: usize,
    pub r: u64,
    pub algorithm: AlgorithmKind,
    pub operator: StepOperatorKind,
    pub metric: MetricKind,
    /// Mean hitting time over runs that reached the optimum.
    #[serde(with = "crate::numfmt")]
    pub mean: f64,
    #[serde(with = "crate::numfmt")]
    pub std_error: f64,
    #[serde(with = "crate::numfmt")]
    pub median: f64,
    pub replicates: u64,
    /// Runs stopped by the iteration cap.
    pub capped: u64,
}

impl AggregateResult {
    /// At least one run was cut off by the cap, so the mean is right-censored.
    pub fn is_censored(&self) -> bool {
        self.capped > 0
    }
}

/// `(mean, std_error, median, capped)` over uncapped runs. A single run has
/// standard error 0; no uncapped run gives NaN statistics.
pub fn summarize_times(times: &[Option<u64>]) -> (f64, f64, f64, u64) {
    let mut done: Vec<u64> = times.iter().flatten().copied().collect();
    let capped = (times.len() - done.len()) as u64;
    if done.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN, capped);
    }
    done.sort_unstable();
    let m = done.len();
    let mean = done.iter().map(|&t| t as f64).sum::<f64>() / m as f64;
    let std_error = if m > 1 {
        let var = done.iter().map(|&t| (t as f64 - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
        (var / m as f64).sqrt()
    } else {
        0.0
    };
    let median = if m % 2 == 1 {
        done[m / 2] as f64
    } else {
        (done[m / 2 - 1] as f64 + done[m / 2] as f64) / 2.0
    };
    (mean, std_error, median, capped)
}

struct Cell {
    n: usize,
    r: u64,
    algorithm: AlgorithmKind,
    operator: StepOperatorKind,
    searcher: Searcher,
    seed: u64,
}

fn fixed_target(params: &SpaceParams, policy: TargetPolicy) -> ValueVector {
    let v = match policy {
        TargetPolicy::Center => params.r() / 2,
        _ => 0,
    };
    ValueVector::filled(params, v).expect("0 and r/2 lie in [0, r-1]")
}

fn run_replicate(plan: &ExperimentPlan, cell: &Cell, k: u64) -> Result<Option<u64>> {
    let mut setup = rng_from_seed(sub_seed(cell.seed, k));
    let params = *cell.searcher.instance().params();
    let replaced;
    let searcher = if plan.target_policy == TargetPolicy::UniformRandomPerReplicate {
        let z = sample_uniform_point(&params, &mut setup);
        replaced = cell
            .searcher
            .with_instance(ProblemInstance::new(params, plan.metric, z)?)?;
        &replaced
    } else {
        &cell.searcher
    };
    let target = searcher.instance().target();
    let initial = match plan.start_policy {
        StartPolicy::UniformRandom => None,
        StartPolicy::FixedHamming(k) => Some(corrupt_target(&params, target, k, &mut setup)?),
        StartPolicy::AllMaxDistance => Some(farthest_point(searcher.instance())),
    };
    let run_seed = setup.next_u64();
    let record = drive(
        searcher,
        initial.as_ref(),
        run_seed,
        plan.iteration_cap,
        &[],
        |_| {},
    )?;
    Ok(record.hitting_time)
}

/// Runs every `(n, r) x algorithm x operator` cell of the plan.
///
/// Cell `c` (in grid, then algorithm, then operator order) draws its
/// replicates from `sub_seed(base_seed, c)`; replicate `k` derives its target,
/// start and run seed from `sub_seed(cell_seed, k)`. The result depends only
/// on the plan, not on the number of worker threads.
pub fn execute_plan(plan: &ExperimentPlan) -> Result<Vec<AggregateResult>> {
    plan.validate()?;
    let mut cells = Vec::with_capacity(plan.cell_count());
    for &(n, r) in &plan.grid {
        let params = SpaceParams::new(n, r)?;
        let instance = ProblemInstance::new(
            params,
            plan.metric,
            fixed_target(&params, plan.target_policy),
        )?;
        for &algorithm in &plan.algorithms {
            for &operator in &plan.operators {
                let seed = sub_seed(plan.base_seed, cells.len() as u64);
                cells.push(Cell {
                    n,
                    r,
                    algorithm,
                    operator,
                    searcher: Searcher::new(
                        algorithm,
                        operator,
                        instance.clone(),
                        Selection::Elitist,
                    )?,
                    seed,
                });
            }
        }
    }

    let reps = plan.replicates as u64;
    let times: Vec<Option<u64>> = (0..cells.len() as u64 * reps)
        .into_par_iter()
        .map(|task| run_replicate(plan, &cells[(task / reps) as usize], task % reps))
        .collect::<Result<_>>()?;

    Ok(cells
        .iter()
        .zip(times.chunks(plan.replicates))
        .map(|(cell, times)| {
            let (mean, std_error, median, capped) = summarize_times(times);
            AggregateResult {
                n: cell.n,
                r: cell.r,
                algorithm: cell.algorithm,
                operator: cell.operator,
                metric: plan.metric,
                mean,
                std_error,
                median,
                replicates: plan.replicates as u64,
                capped,
            }
        })
        .collect())
}
