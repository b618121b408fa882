//! A token on `{0, ..., r}` that moves from `x` to `x - d` when a random step
//! `d` drawn from a fixed law fits (`d <= x`) and stays put otherwise. Used to
//! compare step-size laws in isolation from the search algorithms.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithm::{rng_from_seed, sub_seed};
use crate::error::{domain, Error, Result};
use crate::step::harmonic_pmf;

/// Largest `r` accepted by the exact oracle.
pub const MAX_EXACT_TOKEN_R: u64 = 4096;

/// Step-size law over `{1, ..., r}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepLaw {
    /// Always 1.
    Unit,
    /// Uniform on `{1, ..., r}`.
    Uniform,
    /// Probability proportional to `1/d`.
    Harmonic,
    /// Entry `d - 1` is the probability of step `d`.
    Explicit(Vec<f64>),
}

impl StepLaw {
    pub fn name(&self) -> &'static str {
        match self {
            StepLaw::Unit => "unit",
            StepLaw::Uniform => "uniform",
            StepLaw::Harmonic => "harmonic",
            StepLaw::Explicit(_) => "explicit",
        }
    }

    /// Probability vector over `{1, ..., r}`.
    pub fn probabilities(&self, r: u64) -> Result<Vec<f64>> {
        if r < 1 {
            return domain("token process needs r >= 1");
        }
        match self {
            StepLaw::Unit => {
                let mut p = vec![0.0; r as usize];
                p[0] = 1.0;
                Ok(p)
            }
            StepLaw::Uniform => Ok(vec![1.0 / r as f64; r as usize]),
            StepLaw::Harmonic => harmonic_pmf(r + 1),
            StepLaw::Explicit(p) => {
                if p.len() as u64 != r {
                    return domain(format!(
                        "explicit law has {} entries, expected r = {r}",
                        p.len()
                    ));
                }
                if p.iter().any(|&v| v.is_nan() || v < 0.0 || !v.is_finite()) {
                    return domain("explicit law has a negative or non-finite entry");
                }
                let total: f64 = p.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return domain(format!("explicit law sums to {total}, not 1"));
                }
                Ok(p.clone())
            }
        }
    }
}

impl fmt::Display for StepLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StepLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "unit" => Ok(StepLaw::Unit),
            "uniform" => Ok(StepLaw::Uniform),
            "harmonic" => Ok(StepLaw::Harmonic),
            other => domain(format!(
                "unknown step law '{other}' (expected unit|uniform|harmonic)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TokenConfig {
    /// Positions are `{0, ..., r}`.
    pub r: u64,
    pub law: StepLaw,
    pub seed: u64,
    pub iteration_cap: u64,
    /// Fixed start; uniform over `{0, ..., r}` when absent.
    pub start: Option<u64>,
}

impl TokenConfig {
    pub fn new(r: u64, law: StepLaw, seed: u64) -> Self {
        Self {
            r,
            law,
            seed,
            iteration_cap: crate::algorithm::DEFAULT_ITERATION_CAP,
            start: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TokenRun {
    pub start: u64,
    /// Rounds until position 0; `None` if the cap was reached.
    pub hitting_time: Option<u64>,
}

/// Prepared sampler for one `(r, law)` pair.
#[derive(Debug, Clone)]
pub struct TokenProcess {
    r: u64,
    cumulative: Vec<f64>,
}

impl TokenProcess {
    pub fn new(r: u64, law: &StepLaw) -> Result<Self> {
        let p = law.probabilities(r)?;
        let mut cumulative = Vec::with_capacity(p.len());
        let mut acc = 0.0;
        for &v in &p {
            acc += v;
            cumulative.push(acc);
        }
        // Everything from the last step with positive mass onwards is 1.
        let last = p
            .iter()
            .rposition(|&v| v > 0.0)
            .expect("law has positive mass");
        for c in &mut cumulative[last..] {
            *c = 1.0;
        }
        Ok(Self { r, cumulative })
    }

    #[inline]
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        self.cumulative.partition_point(|&c| c <= u) as u64 + 1
    }

    pub fn run(&self, seed: u64, start: Option<u64>, cap: u64) -> Result<TokenRun> {
        let mut rng = rng_from_seed(seed);
        let start = match start {
            Some(s) if s > self.r => return domain(format!("start {s} outside [0, {}]", self.r)),
            Some(s) => s,
            None => rng.random_range(0..=self.r),
        };
        let mut x = start;
        let mut t = 0u64;
        while x > 0 {
            if t >= cap {
                return Ok(TokenRun {
                    start,
                    hitting_time: None,
                });
            }
            t += 1;
            let d = self.draw(&mut rng);
            if d <= x {
                x -= d;
            }
        }
        Ok(TokenRun {
            start,
            hitting_time: Some(t),
        })
    }
}

pub fn token_run(config: &TokenConfig) -> Result<TokenRun> {
    if config.iteration_cap == 0 {
        return domain("iteration cap must be positive");
    }
    TokenProcess::new(config.r, &config.law)?.run(config.seed, config.start, config.iteration_cap)
}

/// Monte-Carlo summary of repeated token runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TokenSummary {
    pub mean: f64,
    pub std_error: f64,
    pub runs: u64,
    pub capped: u64,
}

/// `runs` independent token runs; run `k` uses `sub_seed(config.seed, k)`.
pub fn token_monte_carlo(config: &TokenConfig, runs: u64) -> Result<TokenSummary> {
    if runs == 0 {
        return domain("runs must be >= 1");
    }
    if config.iteration_cap == 0 {
        return domain("iteration cap must be positive");
    }
    let process = TokenProcess::new(config.r, &config.law)?;
    let times: Vec<Option<u64>> = (0..runs)
        .into_par_iter()
        .map(|k| {
            process
                .run(sub_seed(config.seed, k), config.start, config.iteration_cap)
                .map(|t| t.hitting_time)
        })
        .collect::<Result<_>>()?;
    let done: Vec<f64> = times.iter().flatten().map(|&t| t as f64).collect();
    let m = done.len() as f64;
    let (mean, std_error) = if done.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        let mean = done.iter().sum::<f64>() / m;
        let se = if done.len() > 1 {
            (done.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (m - 1.0) / m).sqrt()
        } else {
            0.0
        };
        (mean, se)
    };
    Ok(TokenSummary {
        mean,
        std_error,
        runs,
        capped: runs - done.len() as u64,
    })
}

/// Expected hitting time per start position, `E[x]` for `x = 0..=r`.
///
/// `E[0] = 0` and `E[x] = (1 + sum_{d<=x} P[d] E[x-d]) / P[D <= x]`, a
/// forward substitution in `O(r^2)`.
pub fn token_expected_hitting_times(r: u64, law: &StepLaw) -> Result<Vec<f64>> {
    if r > MAX_EXACT_TOKEN_R {
        return Err(Error::Capacity(format!(
            "exact token oracle supports r <= {MAX_EXACT_TOKEN_R}, got {r}"
        )));
    }
    let p = law.probabilities(r)?;
    let mut e = vec![0.0f64; r as usize + 1];
    let mut mass = 0.0f64;
    for x in 1..=r as usize {
        mass += p[x - 1];
        if mass <= 0.0 {
            return Err(Error::Divergent(format!(
                "position {x} can never move: no step of size <= {x} has positive probability"
            )));
        }
        let inflow: f64 = (1..=x).map(|d| p[d - 1] * e[x - d]).sum();
        e[x] = (1.0 + inflow) / mass;
    }
    Ok(e)
}

/// Exact `E[T_D]` for a uniformly random start on `{0, ..., r}`.
pub fn token_expected_hitting_time_exact(r: u64, law: &StepLaw) -> Result<f64> {
    let e = token_expected_hitting_times(r, law)?;
    Ok(e.iter().sum::<f64>() / e.len() as f64)
}
