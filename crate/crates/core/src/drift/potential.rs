use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::space::{hamming_raw, ProblemInstance, ValueVector};

/// Base used for the exponential-weight potential when none is given.
///
/// Satisfies `w - 1 - e (w - 1)^2 > 0` (0.25 - e/16 ≈ 0.080), the margin the
/// (1+1) EA analysis under `±1` steps needs.
pub const DEFAULT_EXPONENTIAL_BASE: f64 = 1.25;

/// Potential functions measuring distance from the target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    /// Number of positions that disagree with the target.
    HammingToTarget,
    /// The OneMax fitness itself.
    Fitness,
    /// `sum_i (w^{d(x_i, z_i)} - 1)` for a base `1 < w <= 2`.
    ExponentialWeight(f64),
}

impl PotentialKind {
    pub fn exponential(w: f64) -> Result<Self> {
        let kind = PotentialKind::ExponentialWeight(w);
        kind.validate()?;
        Ok(kind)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PotentialKind::ExponentialWeight(w) if !(w > 1.0 && w <= 2.0) => domain(format!(
                "exponential weight base must lie in (1, 2], got {w}"
            )),
            _ => Ok(()),
        }
    }

    /// Whether the potential only takes integer values.
    pub fn is_integral(&self) -> bool {
        !matches!(self, PotentialKind::ExponentialWeight(_))
    }

    pub(crate) fn evaluate_raw(&self, instance: &ProblemInstance, x: &[u32]) -> f64 {
        match *self {
            PotentialKind::HammingToTarget => hamming_raw(x, instance.target().values()) as f64,
            PotentialKind::Fitness => instance.fitness_unchecked(x) as f64,
            PotentialKind::ExponentialWeight(w) => x
                .iter()
                .enumerate()
                .map(|(i, &v)| exp_term(w, instance.component_distance(i, v)))
                .sum(),
        }
    }
}

#[inline]
fn exp_term(w: f64, d: u64) -> f64 {
    if d == 0 {
        0.0
    } else {
        w.powf(d as f64) - 1.0
    }
}

impl fmt::Display for PotentialKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialKind::HammingToTarget => f.write_str("hamming"),
            PotentialKind::Fitness => f.write_str("fitness"),
            PotentialKind::ExponentialWeight(w) => write!(f, "exp:{w}"),
        }
    }
}

impl FromStr for PotentialKind {
    type Err = Error;

    /// Accepts `hamming`, `fitness`, `exp` (default base) or `exp:<w>`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "hamming" => Ok(PotentialKind::HammingToTarget),
            "fitness" => Ok(PotentialKind::Fitness),
            "exp" => Ok(PotentialKind::ExponentialWeight(DEFAULT_EXPONENTIAL_BASE)),
            other => match other.strip_prefix("exp:") {
                Some(w) => {
                    let w: f64 = w
                        .parse()
                        .map_err(|_| Error::Domain(format!("bad exponential base '{w}'")))?;
                    PotentialKind::exponential(w)
                }
                None => domain(format!(
                    "unknown potential '{s}' (expected hamming|fitness|exp[:w])"
                )),
            },
        }
    }
}

pub fn potential(kind: PotentialKind, instance: &ProblemInstance, x: &ValueVector) -> Result<f64> {
    kind.validate()?;
    x.conforms_to(instance.params())?;
    Ok(kind.evaluate_raw(instance, x.values()))
}
