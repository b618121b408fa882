//! Elementary step operators acting on a single component.
//!
//! Under the ring metric every step wraps around. Under the interval metric
//! a `±1` or harmonic step that would leave `[0, r-1]` is infeasible and
//! reported as `None`; the caller leaves the component unchanged. Direction
//! and size are drawn first and feasibility is checked afterwards, with no
//! re-draw.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::space::MetricKind;

/// Largest alphabet for which a harmonic cumulative table is built (1 GiB of `f64`).
pub const MAX_HARMONIC_TABLE: u64 = 1 << 27;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepOperatorKind {
    /// Jump to a different value chosen uniformly at random.
    Uniform,
    /// Add or subtract one, each with probability 1/2.
    #[serde(rename = "pm1", alias = "plusminusone")]
    PlusMinusOne,
    /// Step size `j` in `[1, r-1]` with probability proportional to `1/j`, direction uniform.
    Harmonic,
}

impl StepOperatorKind {
    pub const ALL: [StepOperatorKind; 3] = [
        StepOperatorKind::Uniform,
        StepOperatorKind::PlusMinusOne,
        StepOperatorKind::Harmonic,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            StepOperatorKind::Uniform => "uniform",
            StepOperatorKind::PlusMinusOne => "pm1",
            StepOperatorKind::Harmonic => "harmonic",
        }
    }
}

impl fmt::Display for StepOperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StepOperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(StepOperatorKind::Uniform),
            "pm1" | "plusminusone" | "unit" | "±1" => Ok(StepOperatorKind::PlusMinusOne),
            "harmonic" => Ok(StepOperatorKind::Harmonic),
            other => domain(format!(
                "unknown step operator '{other}' (expected uniform|pm1|harmonic)"
            )),
        }
    }
}

/// Inverse-CDF sampler for the harmonic step size law on `[1, r-1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicTable {
    r: u32,
    cumulative: Vec<f64>,
    normalizer: f64,
}

impl HarmonicTable {
    pub fn new(r: u64) -> Result<Self> {
        if r < 2 {
            return domain(format!("harmonic law needs r >= 2 (got {r})"));
        }
        if r > MAX_HARMONIC_TABLE {
            return Err(Error::Capacity(format!(
                "harmonic table for r = {r} exceeds the 2^27 entry limit"
            )));
        }
        let mut cumulative = Vec::with_capacity((r - 1) as usize);
        let mut acc = 0.0f64;
        for j in 1..r {
            acc += 1.0 / j as f64;
            cumulative.push(acc);
        }
        let normalizer = acc;
        for c in cumulative.iter_mut() {
            *c /= normalizer;
        }
        *cumulative.last_mut().expect("r >= 2") = 1.0;
        Ok(Self {
            r: r as u32,
            cumulative,
            normalizer,
        })
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    /// `H_{r-1}`.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn probability(&self, j: u32) -> f64 {
        if j == 0 || j >= self.r {
            0.0
        } else {
            (1.0 / j as f64) / self.normalizer
        }
    }

    pub fn pmf(&self) -> Vec<f64> {
        (1..self.r).map(|j| self.probability(j)).collect()
    }

    /// Draws a step size in `[1, r-1]`.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.random();
        self.cumulative.partition_point(|&c| c <= u) as u32 + 1
    }
}

/// Probability vector of the harmonic step size law; entry `j-1` is `(1/j)/H_{r-1}`.
pub fn harmonic_pmf(r: u64) -> Result<Vec<f64>> {
    if r < 2 {
        return domain(format!("r must be >= 2 (got {r})"));
    }
    if r > MAX_HARMONIC_TABLE {
        return Err(Error::Capacity(format!(
            "r = {r} too large for a dense pmf"
        )));
    }
    // Summing smallest terms first keeps the normalizer accurate for large r.
    let h: f64 = (1..r).rev().map(|j| 1.0 / j as f64).sum();
    Ok((1..r).map(|j| (1.0 / j as f64) / h).collect())
}

/// A step operator bound to a metric and alphabet size.
#[derive(Debug, Clone)]
pub struct StepOperator {
    kind: StepOperatorKind,
    metric: MetricKind,
    r: u32,
    harmonic: Option<Arc<HarmonicTable>>,
}

impl StepOperator {
    pub fn new(kind: StepOperatorKind, metric: MetricKind, r: u32) -> Result<Self> {
        if r < 2 {
            return domain(format!("r must be >= 2 (got {r})"));
        }
        let harmonic = match kind {
            StepOperatorKind::Harmonic => Some(Arc::new(HarmonicTable::new(r as u64)?)),
            _ => None,
        };
        Ok(Self {
            kind,
            metric,
            r,
            harmonic,
        })
    }

    pub fn kind(&self) -> StepOperatorKind {
        self.kind
    }

    pub fn metric(&self) -> MetricKind {
        self.metric
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn harmonic_table(&self) -> Option<&HarmonicTable> {
        self.harmonic.as_deref()
    }

    /// Applies one elementary step to `current`; `None` marks an infeasible step.
    pub fn apply<R: Rng + ?Sized>(&self, current: u32, rng: &mut R) -> Result<Option<u32>> {
        if current >= self.r {
            return domain(format!("value {current} outside [0, {}]", self.r - 1));
        }
        Ok(self.apply_unchecked(current, rng))
    }

    #[inline]
    pub(crate) fn apply_unchecked<R: Rng + ?Sized>(
        &self,
        current: u32,
        rng: &mut R,
    ) -> Option<u32> {
        match self.kind {
            StepOperatorKind::Uniform => {
                let v = rng.random_range(0..self.r - 1);
                Some(if v >= current { v + 1 } else { v })
            }
            StepOperatorKind::PlusMinusOne => self.shift(current, 1, rng.random::<bool>()),
            StepOperatorKind::Harmonic => {
                let table = self
                    .harmonic
                    .as_ref()
                    .expect("harmonic table built in new()");
                let j = table.sample(rng);
                self.shift(current, j, rng.random::<bool>())
            }
        }
    }

    #[inline]
    fn shift(&self, current: u32, j: u32, up: bool) -> Option<u32> {
        let (c, j, r) = (current as u64, j as u64, self.r as u64);
        match (self.metric, up) {
            (MetricKind::Ring, true) => Some(((c + j) % r) as u32),
            (MetricKind::Ring, false) => Some(((c + r - j) % r) as u32),
            (MetricKind::Interval, true) => (c + j < r).then(|| (c + j) as u32),
            (MetricKind::Interval, false) => (c >= j).then(|| (c - j) as u32),
        }
    }
}

/// One-shot step. Builds the harmonic table on every call; use [`StepOperator`]
/// for repeated draws.
pub fn step<R: Rng + ?Sized>(
    kind: StepOperatorKind,
    metric: MetricKind,
    current: u32,
    r: u32,
    rng: &mut R,
) -> Result<Option<u32>> {
    StepOperator::new(kind, metric, r)?.apply(current, rng)
}
