//! Search space `[r]^n`, the interval and ring metrics on `[r]`, and the
//! r-valued OneMax fitness family `f(x) = sum_i d(x_i, z_i)`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Largest supported alphabet size. Values are stored as `u32`.
pub const MAX_ALPHABET: u64 = 1 << 31;

/// Dimensions of the search space `[r]^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpaceParams {
    n: usize,
    r: u32,
}

impl SpaceParams {
    pub fn new(n: usize, r: u64) -> Result<Self> {
        if n == 0 {
            return domain("n must be >= 1");
        }
        if r < 2 {
            return domain(format!("r must be >= 2 (got {r})"));
        }
        if r > MAX_ALPHABET {
            return Err(Error::Capacity(format!("r = {r} exceeds 2^31")));
        }
        Ok(Self { n, r: r as u32 })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    fn check_value(&self, v: u32) -> Result<()> {
        if v >= self.r {
            return domain(format!("value {v} outside [0, {}]", self.r - 1));
        }
        Ok(())
    }
}

/// A point of `[r]^n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ValueVector(Vec<u32>);

impl ValueVector {
    /// Wraps `values` after checking every entry against `params`.
    pub fn new(params: &SpaceParams, values: Vec<u32>) -> Result<Self> {
        if values.len() != params.n {
            return domain(format!(
                "vector has length {}, expected n = {}",
                values.len(),
                params.n
            ));
        }
        for &v in &values {
            params.check_value(v)?;
        }
        Ok(Self(values))
    }

    /// Constant vector `(v, ..., v)`.
    pub fn filled(params: &SpaceParams, v: u32) -> Result<Self> {
        params.check_value(v)?;
        Ok(Self(vec![v; params.n]))
    }

    pub(crate) fn from_raw(values: Vec<u32>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<u32> {
        self.0
    }

    /// Checks that this vector is a point of `params`' space.
    pub fn conforms_to(&self, params: &SpaceParams) -> Result<()> {
        if self.0.len() != params.n {
            return domain(format!(
                "vector has length {}, expected n = {}",
                self.0.len(),
                params.n
            ));
        }
        self.0.iter().try_for_each(|&v| params.check_value(v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    /// `|b - a|`.
    Interval,
    /// Interval metric with wrap-around between `0` and `r - 1`.
    Ring,
}

impl MetricKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MetricKind::Interval => "interval",
            MetricKind::Ring => "ring",
        }
    }

    /// Unchecked distance; callers guarantee `a, b < r`.
    #[inline]
    pub(crate) fn dist(self, a: u32, b: u32, r: u32) -> u64 {
        let diff = a.abs_diff(b);
        match self {
            MetricKind::Interval => diff as u64,
            MetricKind::Ring => diff.min(r - diff) as u64,
        }
    }

    /// Largest distance any single component can have.
    pub fn max_component_distance(self, r: u32) -> u64 {
        match self {
            MetricKind::Interval => (r - 1) as u64,
            MetricKind::Ring => (r / 2) as u64,
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "interval" | "int" => Ok(MetricKind::Interval),
            "ring" => Ok(MetricKind::Ring),
            other => domain(format!("unknown metric '{other}' (expected interval|ring)")),
        }
    }
}

pub fn metric_distance(kind: MetricKind, a: u32, b: u32, r: u32) -> Result<u64> {
    if r < 2 {
        return domain(format!("r must be >= 2 (got {r})"));
    }
    if a >= r || b >= r {
        return domain(format!("values ({a}, {b}) outside [0, {}]", r - 1));
    }
    Ok(kind.dist(a, b, r))
}

/// An r-valued OneMax function: metric plus hidden target `z`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemInstance {
    params: SpaceParams,
    metric: MetricKind,
    target: ValueVector,
}

impl ProblemInstance {
    pub fn new(params: SpaceParams, metric: MetricKind, target: ValueVector) -> Result<Self> {
        target.conforms_to(&params)?;
        Ok(Self {
            params,
            metric,
            target,
        })
    }

    /// The plain OneMax variant: target `(0, ..., 0)` under the interval metric.
    pub fn plain(params: SpaceParams) -> Self {
        Self {
            params,
            metric: MetricKind::Interval,
            target: ValueVector(vec![0; params.n]),
        }
    }

    pub fn params(&self) -> &SpaceParams {
        &self.params
    }

    pub fn metric(&self) -> MetricKind {
        self.metric
    }

    pub fn target(&self) -> &ValueVector {
        &self.target
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn r(&self) -> u32 {
        self.params.r
    }

    /// Distance of value `v` at position `i` to the target entry.
    #[inline]
    pub(crate) fn component_distance(&self, i: usize, v: u32) -> u64 {
        self.metric.dist(v, self.target.0[i], self.params.r)
    }

    pub(crate) fn fitness_unchecked(&self, x: &[u32]) -> u64 {
        x.iter()
            .zip(&self.target.0)
            .map(|(&a, &b)| self.metric.dist(a, b, self.params.r))
            .sum()
    }

    pub fn fitness(&self, x: &ValueVector) -> Result<u64> {
        x.conforms_to(&self.params)?;
        Ok(self.fitness_unchecked(&x.0))
    }

    /// Upper bound on fitness over the whole space.
    pub fn max_fitness(&self) -> u64 {
        self.params.n as u64 * self.metric.max_component_distance(self.params.r)
    }
}

pub fn fitness(instance: &ProblemInstance, x: &ValueVector) -> Result<u64> {
    instance.fitness(x)
}

/// Number of positions where `x` and `y` differ.
pub fn hamming_distance(x: &ValueVector, y: &ValueVector) -> Result<usize> {
    if x.len() != y.len() {
        return domain(format!("length mismatch: {} vs {}", x.len(), y.len()));
    }
    Ok(hamming_raw(&x.0, &y.0))
}

#[inline]
pub(crate) fn hamming_raw(x: &[u32], y: &[u32]) -> usize {
    x.iter().zip(y).filter(|(a, b)| a != b).count()
}

pub fn sample_uniform_point<R: Rng + ?Sized>(params: &SpaceParams, rng: &mut R) -> ValueVector {
    ValueVector(
        (0..params.n)
            .map(|_| rng.random_range(0..params.r))
            .collect(),
    )
}

/// Copy of `target` with exactly `k` positions, chosen uniformly, moved to a
/// uniformly chosen different value.
pub fn corrupt_target<R: Rng + ?Sized>(
    params: &SpaceParams,
    target: &ValueVector,
    k: usize,
    rng: &mut R,
) -> Result<ValueVector> {
    target.conforms_to(params)?;
    if k > params.n {
        return domain(format!(
            "cannot corrupt {k} positions of a length-{} vector",
            params.n
        ));
    }
    let mut values = target.0.clone();
    for i in rand::seq::index::sample(rng, params.n, k) {
        let v = rng.random_range(0..params.r - 1);
        values[i] = if v >= values[i] { v + 1 } else { v };
    }
    Ok(ValueVector(values))
}

/// The point whose every component is as far from the target as the metric allows.
pub fn farthest_point(instance: &ProblemInstance) -> ValueVector {
    let r = instance.r();
    let values = instance
        .target()
        .values()
        .iter()
        .map(|&z| match instance.metric() {
            MetricKind::Interval => {
                if z <= (r - 1) / 2 {
                    r - 1
                } else {
                    0
                }
            }
            MetricKind::Ring => ((z as u64 + (r / 2) as u64) % r as u64) as u32,
        })
        .collect();
    ValueVector(values)
}
