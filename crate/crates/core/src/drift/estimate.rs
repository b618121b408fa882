use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithm::{rng_from_seed, sub_seed, RunConfig, Scratch, Searcher};
use crate::drift::PotentialKind;
use crate::error::{domain, Result};
use crate::space::{corrupt_target, ValueVector};

/// z-score of a two-sided 95% normal interval.
const Z95: f64 = 1.959_963_984_540_054;

/// Runs collected per parallel round when sampling visited states.
const VISIT_CHUNK: u64 = 32;

/// How parent states are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum Conditioning {
    /// Transitions along ordinary runs of the configured algorithm.
    Visited,
    /// For each level `k`, fresh states with exactly `k` positions of the
    /// target corrupted to uniform wrong values.
    PlantedHamming(Vec<usize>),
    /// The given states, each sampled repeatedly.
    PlantedStates(Vec<ValueVector>),
}

/// Bucket key: the exact potential for integer potentials, otherwise the
/// sorted per-component distance profile.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Level {
    Exact(u64),
    DistanceProfile(Vec<u64>),
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Exact(v) => write!(f, "{v}"),
            Level::DistanceProfile(d) => {
                let parts: Vec<String> = d.iter().map(u64::to_string).collect();
                write!(f, "[{}]", parts.join(" "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftEstimate {
    pub level: Level,
    /// Mean of `g(x_t) - g(x_{t+1})`.
    pub mean_drop: f64,
    /// Half-width of the 95% normal-approximation confidence interval.
    pub confidence_halfwidth: f64,
    pub samples: u64,
}

impl DriftEstimate {
    pub fn contains(&self, value: f64) -> bool {
        (self.mean_drop - value).abs() <= self.confidence_halfwidth
    }
}

fn level_of(kind: PotentialKind, searcher: &Searcher, x: &[u32], g: f64) -> Level {
    if kind.is_integral() {
        Level::Exact(g as u64)
    } else {
        let inst = searcher.instance();
        let mut d: Vec<u64> = x
            .iter()
            .enumerate()
            .map(|(i, &v)| inst.component_distance(i, v))
            .collect();
        d.sort_unstable_by(|a, b| b.cmp(a));
        Level::DistanceProfile(d)
    }
}

fn one_step(
    searcher: &Searcher,
    kind: PotentialKind,
    start: &ValueVector,
    seed: u64,
) -> Result<(Level, f64)> {
    let mut rng = rng_from_seed(seed);
    let mut state = searcher.state_at(start)?;
    let inst = searcher.instance();
    let before = kind.evaluate_raw(inst, state.point());
    let level = level_of(kind, searcher, state.point(), before);
    searcher.iterate(&mut state, &mut Scratch::default(), &mut rng);
    let after = kind.evaluate_raw(inst, state.point());
    Ok((level, before - after))
}

/// Empirical one-step drift of `potential` under the configured algorithm,
/// bucketed by the parent's level.
///
/// For planted conditioning every planted level (or state) receives
/// `samples` transitions; for [`Conditioning::Visited`] `samples` is the
/// total number of transitions collected across restarted runs. Levels that
/// are never visited produce no bucket.
pub fn estimate_drift(
    config: &RunConfig,
    potential: PotentialKind,
    conditioning: &Conditioning,
    samples: u64,
) -> Result<Vec<DriftEstimate>> {
    if samples < 100 {
        return domain(format!("need at least 100 samples, got {samples}"));
    }
    config.validate()?;
    potential.validate()?;
    let searcher = config.searcher()?;
    let params = *searcher.instance().params();
    let target = searcher.instance().target().clone();

    let observations: Vec<(Level, f64)> = match conditioning {
        Conditioning::PlantedHamming(levels) => {
            if let Some(&k) = levels.iter().find(|&&k| k > params.n()) {
                return domain(format!("planted level {k} exceeds n = {}", params.n()));
            }
            let mut all = Vec::new();
            for (li, &k) in levels.iter().enumerate() {
                let level_seed = sub_seed(config.seed, li as u64);
                let part: Result<Vec<_>> = (0..samples)
                    .into_par_iter()
                    .map(|s| {
                        let seed = sub_seed(level_seed, s);
                        let mut rng = rng_from_seed(seed);
                        let x = corrupt_target(&params, &target, k, &mut rng)?;
                        one_step(&searcher, potential, &x, sub_seed(seed, 0))
                    })
                    .collect();
                all.extend(part?);
            }
            all
        }
        Conditioning::PlantedStates(states) => {
            let mut all = Vec::new();
            for (si, x) in states.iter().enumerate() {
                x.conforms_to(&params)?;
                let state_seed = sub_seed(config.seed, si as u64);
                let part: Result<Vec<_>> = (0..samples)
                    .into_par_iter()
                    .map(|s| one_step(&searcher, potential, x, sub_seed(state_seed, s)))
                    .collect();
                all.extend(part?);
            }
            all
        }
        Conditioning::Visited => collect_visited(&searcher, config, potential, samples)?,
    };

    let mut buckets: BTreeMap<Level, Vec<f64>> = BTreeMap::new();
    for (level, drop) in observations {
        buckets.entry(level).or_default().push(drop);
    }
    Ok(buckets
        .into_iter()
        .map(|(level, drops)| summarize(level, &drops))
        .collect())
}

fn collect_visited(
    searcher: &Searcher,
    config: &RunConfig,
    kind: PotentialKind,
    samples: u64,
) -> Result<Vec<(Level, f64)>> {
    let cap = config.iteration_cap.unwrap_or(u64::MAX);
    let mut out: Vec<(Level, f64)> = Vec::with_capacity(samples as usize);
    let mut next_run = 0u64;
    while (out.len() as u64) < samples {
        let chunk: Result<Vec<Vec<(Level, f64)>>> = (next_run..next_run + VISIT_CHUNK)
            .into_par_iter()
            .map(|k| {
                let mut rng = rng_from_seed(sub_seed(config.seed, k));
                let mut state = searcher.start(config.initial_point.as_ref(), &mut rng)?;
                let inst = searcher.instance();
                let mut scratch = Scratch::default();
                let mut obs = Vec::new();
                let mut t = 0u64;
                while state.fitness() > 0 && t < cap && (obs.len() as u64) < samples {
                    let before = kind.evaluate_raw(inst, state.point());
                    let level = level_of(kind, searcher, state.point(), before);
                    searcher.iterate(&mut state, &mut scratch, &mut rng);
                    obs.push((level, before - kind.evaluate_raw(inst, state.point())));
                    t += 1;
                }
                Ok(obs)
            })
            .collect();
        next_run += VISIT_CHUNK;
        let chunk = chunk?;
        if chunk.iter().all(Vec::is_empty) && out.is_empty() {
            // Every start is already optimal; nothing to observe.
            break;
        }
        for obs in chunk {
            out.extend(obs);
        }
    }
    out.truncate(samples as usize);
    Ok(out)
}

fn summarize(level: Level, drops: &[f64]) -> DriftEstimate {
    let m = drops.len() as f64;
    let mean = drops.iter().sum::<f64>() / m;
    let halfwidth = if drops.len() > 1 {
        let var = drops.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (m - 1.0);
        Z95 * (var / m).sqrt()
    } else {
        0.0
    };
    DriftEstimate {
        level,
        mean_drop: mean,
        confidence_halfwidth: halfwidth,
        samples: drops.len() as u64,
    }
}
