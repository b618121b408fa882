//! Randomized local search and the (1+1) EA on r-valued OneMax functions.
//!
//! Both algorithms keep a single search point `x`. Each iteration builds an
//! offspring `y` by applying the step operator to some positions of `x`
//! (exactly one uniformly chosen position for RLS, each position
//! independently with probability `1/n` for the EA), evaluates it, and keeps
//! it iff `f(y) <= f(x)`. The hitting time is the 1-based index of the first
//! iteration whose offspring has fitness zero; the initial point is
//! evaluation 0.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drift::PotentialKind;
use crate::error::{domain, Error, Result};
use crate::space::{sample_uniform_point, ProblemInstance, ValueVector};
use crate::step::{StepOperator, StepOperatorKind};

/// Generator used for every simulation in this crate.
pub type SimRng = ChaCha8Rng;

pub const DEFAULT_ITERATION_CAP: u64 = 10_000_000_000;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Seed of replicate `index` derived from a base seed.
///
/// This is the SplitMix64 output for state `seed + (index + 1) * golden_gamma`,
/// so sub-seeds of consecutive replicates are decorrelated.
pub fn sub_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AlgorithmKind {
    #[serde(rename = "rls")]
    Rls,
    #[serde(rename = "ea")]
    OnePlusOneEa,
}

impl AlgorithmKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            AlgorithmKind::Rls => "rls",
            AlgorithmKind::OnePlusOneEa => "ea",
        }
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlgorithmKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rls" => Ok(AlgorithmKind::Rls),
            "ea" | "oea" | "1+1ea" | "(1+1)ea" | "(1+1)-ea" => Ok(AlgorithmKind::OnePlusOneEa),
            other => domain(format!("unknown algorithm '{other}' (expected rls|ea)")),
        }
    }
}

/// Acceptance rule applied after each mutation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Selection {
    /// Keep the offspring iff it is not worse.
    #[default]
    Elitist,
    /// Always keep the offspring (mutation-only mode, for diagnostics).
    AcceptAll,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub algorithm: AlgorithmKind,
    pub operator: StepOperatorKind,
    pub instance: ProblemInstance,
    pub seed: u64,
    /// Maximum number of iterations; `None` runs until the optimum is found.
    pub iteration_cap: Option<u64>,
    /// Fixed start overriding uniform initialization.
    pub initial_point: Option<ValueVector>,
    /// Potentials recorded after every iteration. Empty means no trace.
    pub trace_potentials: Vec<PotentialKind>,
    pub selection: Selection,
}

impl RunConfig {
    pub fn new(
        algorithm: AlgorithmKind,
        operator: StepOperatorKind,
        instance: ProblemInstance,
        seed: u64,
    ) -> Self {
        Self {
            algorithm,
            operator,
            instance,
            seed,
            iteration_cap: Some(DEFAULT_ITERATION_CAP),
            initial_point: None,
            trace_potentials: Vec::new(),
            selection: Selection::Elitist,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_cap(mut self, cap: Option<u64>) -> Self {
        self.iteration_cap = cap;
        self
    }

    pub fn with_initial_point(mut self, x: ValueVector) -> Self {
        self.initial_point = Some(x);
        self
    }

    pub fn with_trace(mut self, potentials: Vec<PotentialKind>) -> Self {
        self.trace_potentials = potentials;
        self
    }

    pub fn with_selection(mut self, selection: Selection) -> Self {
        self.selection = selection;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(x) = &self.initial_point {
            x.conforms_to(self.instance.params())?;
        }
        if self.iteration_cap == Some(0) {
            return domain("iteration cap must be positive");
        }
        self.trace_potentials.iter().try_for_each(|p| p.validate())
    }

    pub fn searcher(&self) -> Result<Searcher> {
        Searcher::new(
            self.algorithm,
            self.operator,
            self.instance.clone(),
            self.selection,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: u64,
    /// One value per requested potential, in request order.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    /// `None` when the iteration cap was reached first.
    pub hitting_time: Option<u64>,
    pub final_fitness: u64,
    /// Fitness evaluations performed, the initial one included.
    pub evaluations: u64,
    pub final_point: ValueVector,
    pub trace: Option<Vec<TracePoint>>,
}

impl RunRecord {
    pub fn is_capped(&self) -> bool {
        self.hitting_time.is_none()
    }
}

/// A component modified while building the offspring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Change {
    pub position: usize,
    pub old: u32,
    pub new: u32,
}

/// What one iteration did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outcome {
    /// Positions chosen for mutation, infeasible steps included.
    pub selected: usize,
    pub parent_fitness: u64,
    pub offspring_fitness: u64,
    pub accepted: bool,
}

/// Passed to run observers after each iteration.
#[derive(Debug)]
pub struct IterationEvent<'a> {
    pub iteration: u64,
    pub outcome: Outcome,
    /// Components that differ between parent and offspring.
    pub changes: &'a [Change],
    /// The current search point after selection.
    pub current: &'a [u32],
}

/// Current search point and its fitness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchState {
    x: Vec<u32>,
    fitness: u64,
}

impl SearchState {
    pub fn point(&self) -> &[u32] {
        &self.x
    }

    pub fn fitness(&self) -> u64 {
        self.fitness
    }

    pub fn to_vector(&self) -> ValueVector {
        ValueVector::from_raw(self.x.clone())
    }
}

/// Reusable buffers for [`Searcher::iterate`].
#[derive(Debug, Default, Clone)]
pub struct Scratch {
    changes: Vec<Change>,
    picks: Vec<usize>,
}

impl Scratch {
    pub fn changes(&self) -> &[Change] {
        &self.changes
    }
}

/// Inverse-CDF table for the number of positions the EA mutates, Bin(n, 1/n).
#[derive(Debug)]
struct MutationCount {
    cumulative: Vec<f64>,
}

impl MutationCount {
    fn new(n: usize) -> Self {
        if n == 1 {
            return Self {
                cumulative: vec![0.0, 1.0],
            };
        }
        let p = 1.0 / n as f64;
        let q = 1.0 - p;
        let mut pmf = 1.0f64;
        for _ in 0..n {
            pmf *= q;
        }
        let mut cumulative = vec![pmf];
        let mut acc = pmf;
        for k in 0..n {
            pmf *= (n - k) as f64 / (k + 1) as f64 * (p / q);
            acc += pmf;
            cumulative.push(acc);
            if pmf < 1e-20 {
                break;
            }
        }
        *cumulative.last_mut().unwrap() = 1.0;
        Self { cumulative }
    }

    #[inline]
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cumulative.partition_point(|&c| c <= u)
    }
}

/// One algorithm bound to one problem instance and step operator.
#[derive(Debug, Clone)]
pub struct Searcher {
    algorithm: AlgorithmKind,
    selection: Selection,
    instance: ProblemInstance,
    op: StepOperator,
    counts: Option<Arc<MutationCount>>,
}

impl Searcher {
    pub fn new(
        algorithm: AlgorithmKind,
        operator: StepOperatorKind,
        instance: ProblemInstance,
        selection: Selection,
    ) -> Result<Self> {
        let op = StepOperator::new(operator, instance.metric(), instance.r())?;
        let counts = match algorithm {
            AlgorithmKind::OnePlusOneEa => Some(Arc::new(MutationCount::new(instance.n()))),
            AlgorithmKind::Rls => None,
        };
        Ok(Self {
            algorithm,
            selection,
            instance,
            op,
            counts,
        })
    }

    /// Same algorithm and operator tables on a different instance of the same shape.
    pub fn with_instance(&self, instance: ProblemInstance) -> Result<Self> {
        if instance.params() != self.instance.params()
            || instance.metric() != self.instance.metric()
        {
            return domain("replacement instance must share dimensions and metric");
        }
        Ok(Self {
            instance,
            ..self.clone()
        })
    }

    pub fn instance(&self) -> &ProblemInstance {
        &self.instance
    }

    pub fn algorithm(&self) -> AlgorithmKind {
        self.algorithm
    }

    pub fn operator(&self) -> &StepOperator {
        &self.op
    }

    pub fn state_at(&self, x: &ValueVector) -> Result<SearchState> {
        let fitness = self.instance.fitness(x)?;
        Ok(SearchState {
            x: x.values().to_vec(),
            fitness,
        })
    }

    /// Initial state: `initial` if given, a uniform sample otherwise.
    pub fn start<R: Rng + ?Sized>(
        &self,
        initial: Option<&ValueVector>,
        rng: &mut R,
    ) -> Result<SearchState> {
        match initial {
            Some(x) => self.state_at(x),
            None => {
                let x = sample_uniform_point(self.instance.params(), rng);
                let fitness = self.instance.fitness_unchecked(x.values());
                Ok(SearchState {
                    x: x.into_inner(),
                    fitness,
                })
            }
        }
    }

    /// One mutation and selection step. `scratch.changes()` afterwards lists
    /// the components in which parent and offspring differ.
    pub fn iterate<R: Rng + ?Sized>(
        &self,
        state: &mut SearchState,
        scratch: &mut Scratch,
        rng: &mut R,
    ) -> Outcome {
        scratch.changes.clear();
        let n = state.x.len();
        let selected = match self.algorithm {
            AlgorithmKind::Rls => {
                let i = rng.random_range(0..n);
                self.mutate_at(i, state, &mut scratch.changes, rng);
                1
            }
            AlgorithmKind::OnePlusOneEa => {
                let counts = self.counts.as_ref().expect("EA builds its count table");
                let b = counts.sample(rng);
                // Floyd's sampling of b distinct positions.
                scratch.picks.clear();
                for j in (n - b)..n {
                    let t = rng.random_range(0..=j);
                    let pick = if scratch.picks.contains(&t) { j } else { t };
                    scratch.picks.push(pick);
                }
                for idx in 0..scratch.picks.len() {
                    let i = scratch.picks[idx];
                    self.mutate_at(i, state, &mut scratch.changes, rng);
                }
                b
            }
        };

        let parent_fitness = state.fitness;
        let (gain, loss) = scratch.changes.iter().fold((0u64, 0u64), |(g, l), c| {
            (
                g + self.instance.component_distance(c.position, c.new),
                l + self.instance.component_distance(c.position, c.old),
            )
        });
        let offspring_fitness = parent_fitness + gain - loss;
        let accepted = match self.selection {
            Selection::Elitist => offspring_fitness <= parent_fitness,
            Selection::AcceptAll => true,
        };
        if accepted {
            state.fitness = offspring_fitness;
        } else {
            for c in &scratch.changes {
                state.x[c.position] = c.old;
            }
        }
        Outcome {
            selected,
            parent_fitness,
            offspring_fitness,
            accepted,
        }
    }

    #[inline]
    fn mutate_at<R: Rng + ?Sized>(
        &self,
        i: usize,
        state: &mut SearchState,
        changes: &mut Vec<Change>,
        rng: &mut R,
    ) {
        let old = state.x[i];
        if let Some(new) = self.op.apply_unchecked(old, rng) {
            state.x[i] = new;
            changes.push(Change {
                position: i,
                old,
                new,
            });
        }
    }
}

/// Runs one search until the optimum is evaluated or the cap is reached.
pub fn run(config: &RunConfig) -> Result<RunRecord> {
    run_observed(config, |_| {})
}

/// Like [`run`], calling `observer` after every iteration.
pub fn run_observed<F>(config: &RunConfig, observer: F) -> Result<RunRecord>
where
    F: FnMut(&IterationEvent<'_>),
{
    config.validate()?;
    let searcher = config.searcher()?;
    drive(
        &searcher,
        config.initial_point.as_ref(),
        config.seed,
        config.iteration_cap,
        &config.trace_potentials,
        observer,
    )
}

pub(crate) fn drive<F>(
    searcher: &Searcher,
    initial: Option<&ValueVector>,
    seed: u64,
    iteration_cap: Option<u64>,
    trace_potentials: &[PotentialKind],
    mut observer: F,
) -> Result<RunRecord>
where
    F: FnMut(&IterationEvent<'_>),
{
    let mut rng = rng_from_seed(seed);
    let mut state = searcher.start(initial, &mut rng)?;
    let instance = searcher.instance();
    let tracing = !trace_potentials.is_empty();
    let snapshot = |iteration: u64, x: &[u32]| TracePoint {
        iteration,
        values: trace_potentials
            .iter()
            .map(|p| p.evaluate_raw(instance, x))
            .collect(),
    };
    let mut trace = tracing.then(|| vec![snapshot(0, &state.x)]);
    let mut evaluations = 1u64;

    let mut hitting_time = None;
    if state.fitness == 0 {
        hitting_time = Some(0);
    } else {
        let mut scratch = Scratch::default();
        let cap = iteration_cap.unwrap_or(u64::MAX);
        let mut t = 0u64;
        while t < cap {
            t += 1;
            let outcome = searcher.iterate(&mut state, &mut scratch, &mut rng);
            evaluations += 1;
            if let Some(tr) = trace.as_mut() {
                tr.push(snapshot(t, &state.x));
            }
            observer(&IterationEvent {
                iteration: t,
                outcome,
                changes: &scratch.changes,
                current: &state.x,
            });
            if outcome.offspring_fitness == 0 {
                hitting_time = Some(t);
                break;
            }
        }
    }

    Ok(RunRecord {
        hitting_time,
        final_fitness: state.fitness,
        evaluations,
        final_point: ValueVector::from_raw(state.x),
        trace,
    })
}

/// Runs `replicates` independent searches; replicate `k` uses
/// `sub_seed(config.seed, k)`. Output order and content do not depend on
/// thread scheduling.
pub fn run_batch(config: &RunConfig, replicates: usize) -> Result<Vec<RunRecord>> {
    if replicates == 0 {
        return domain("replicates must be >= 1");
    }
    config.validate()?;
    let searcher = config.searcher()?;
    (0..replicates as u64)
        .into_par_iter()
        .map(|k| {
            drive(
                &searcher,
                config.initial_point.as_ref(),
                sub_seed(config.seed, k),
                config.iteration_cap,
                &config.trace_potentials,
                |_| {},
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{MetricKind, SpaceParams};

    fn instance(n: usize, r: u64, metric: MetricKind) -> ProblemInstance {
        let p = SpaceParams::new(n, r).unwrap();
        ProblemInstance::new(p, metric, ValueVector::filled(&p, 0).unwrap()).unwrap()
    }

    #[test]
    fn sub_seeds_differ() {
        let s: Vec<u64> = (0..100).map(|k| sub_seed(42, k)).collect();
        let mut d = s.clone();
        d.sort_unstable();
        d.dedup();
        assert_eq!(d.len(), s.len());
        assert_ne!(sub_seed(1, 0), sub_seed(2, 0));
    }

    #[test]
    fn start_at_optimum_hits_at_zero() {
        for alg in [AlgorithmKind::Rls, AlgorithmKind::OnePlusOneEa] {
            for op in StepOperatorKind::ALL {
                let inst = instance(5, 7, MetricKind::Interval);
                let z = inst.target().clone();
                let cfg = RunConfig::new(alg, op, inst, 3).with_initial_point(z);
                let rec = run(&cfg).unwrap();
                assert_eq!(rec.hitting_time, Some(0));
                assert_eq!(rec.evaluations, 1);
                assert_eq!(rec.final_fitness, 0);
            }
        }
    }

    #[test]
    fn single_bit_fixed_in_one_iteration() {
        let inst = instance(1, 2, MetricKind::Interval);
        let p = *inst.params();
        let cfg = RunConfig::new(AlgorithmKind::Rls, StepOperatorKind::Uniform, inst, 0)
            .with_initial_point(ValueVector::new(&p, vec![1]).unwrap());
        let recs = run_batch(&cfg, 10_000).unwrap();
        assert!(recs
            .iter()
            .all(|r| r.hitting_time == Some(1) && r.evaluations == 2));
    }

    #[test]
    fn cap_marks_record() {
        let inst = instance(30, 50, MetricKind::Interval);
        let cfg = RunConfig::new(AlgorithmKind::Rls, StepOperatorKind::PlusMinusOne, inst, 9)
            .with_cap(Some(10));
        let rec = run(&cfg).unwrap();
        assert!(rec.is_capped());
        assert_eq!(rec.evaluations, 11);
        assert!(rec.final_fitness > 0);
        assert!(run(&cfg.clone().with_cap(Some(0))).is_err());
    }

    #[test]
    fn incremental_fitness_matches_full_evaluation() {
        for alg in [AlgorithmKind::Rls, AlgorithmKind::OnePlusOneEa] {
            for op in StepOperatorKind::ALL {
                for metric in [MetricKind::Interval, MetricKind::Ring] {
                    let inst = instance(8, 11, metric);
                    let searcher =
                        Searcher::new(alg, op, inst.clone(), Selection::AcceptAll).unwrap();
                    let mut rng = rng_from_seed(5);
                    let mut state = searcher.start(None, &mut rng).unwrap();
                    let mut scratch = Scratch::default();
                    for _ in 0..500 {
                        let out = searcher.iterate(&mut state, &mut scratch, &mut rng);
                        assert_eq!(out.offspring_fitness, inst.fitness_unchecked(state.point()));
                        assert_eq!(state.fitness(), inst.fitness_unchecked(state.point()));
                    }
                }
            }
        }
    }

    #[test]
    fn rejected_offspring_restores_parent() {
        let inst = instance(6, 9, MetricKind::Ring);
        let searcher = Searcher::new(
            AlgorithmKind::OnePlusOneEa,
            StepOperatorKind::Uniform,
            inst,
            Selection::Elitist,
        )
        .unwrap();
        let mut rng = rng_from_seed(8);
        let mut state = searcher.start(None, &mut rng).unwrap();
        let mut scratch = Scratch::default();
        for _ in 0..2000 {
            let before = state.clone();
            let out = searcher.iterate(&mut state, &mut scratch, &mut rng);
            if !out.accepted {
                assert_eq!(state, before);
            }
            assert!(state.fitness() <= before.fitness());
        }
    }

    #[test]
    fn rls_changes_at_most_one_component() {
        let inst = instance(10, 6, MetricKind::Interval);
        let cfg = RunConfig::new(AlgorithmKind::Rls, StepOperatorKind::Harmonic, inst, 4);
        run_observed(&cfg, |ev| {
            assert_eq!(ev.outcome.selected, 1);
            assert!(ev.changes.len() <= 1);
        })
        .unwrap();
    }

    #[test]
    fn binomial_table_single_position() {
        let t = MutationCount::new(1);
        let mut rng = rng_from_seed(1);
        assert!((0..100).all(|_| t.sample(&mut rng) == 1));
    }

    #[test]
    fn parse_algorithm() {
        assert_eq!("RLS".parse::<AlgorithmKind>().unwrap(), AlgorithmKind::Rls);
        assert_eq!(
            "ea".parse::<AlgorithmKind>().unwrap(),
            AlgorithmKind::OnePlusOneEa
        );
        assert!("ga".parse::<AlgorithmKind>().is_err());
    }
}
