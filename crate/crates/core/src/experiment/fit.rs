//! Least-squares fits of run time models that are linear in their coefficients.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::AggregateResult;
use crate::error::{domain, Error, Result};

/// Relative residual norm below which a design column counts as collinear.
const RANK_TOL: f64 = 1e-10;

type Basis = fn(f64, f64) -> f64;

/// Catalog of scaling laws; each is `sum_k c_k * term_k(n, r)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingModel {
    /// `c (r-1) n ln n`, the uniform-strength EA law.
    UniformLeading,
    /// `a n r + b n ln n`, the `±1` law.
    UnitStrength,
    /// `a n ln r (ln n + ln r)`, the harmonic law.
    HarmonicStrength,
    /// `a (ln r)^2 + b ln r + c`.
    LogSquared,
    /// `a r + b`.
    LinearR,
}

impl ScalingModel {
    pub const ALL: [ScalingModel; 5] = [
        ScalingModel::UniformLeading,
        ScalingModel::UnitStrength,
        ScalingModel::HarmonicStrength,
        ScalingModel::LogSquared,
        ScalingModel::LinearR,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ScalingModel::UniformLeading => "uniform-leading",
            ScalingModel::UnitStrength => "unit-strength",
            ScalingModel::HarmonicStrength => "harmonic-strength",
            ScalingModel::LogSquared => "log-squared",
            ScalingModel::LinearR => "linear-r",
        }
    }

    pub fn terms(&self) -> &'static [(&'static str, Basis)] {
        match self {
            ScalingModel::UniformLeading => &[("(r-1) n ln n", |n, r| (r - 1.0) * n * n.ln())],
            ScalingModel::UnitStrength => &[("n r", |n, r| n * r), ("n ln n", |n, _| n * n.ln())],
            ScalingModel::HarmonicStrength => &[("n ln r (ln n + ln r)", |n, r| {
                n * r.ln() * (n.ln() + r.ln())
            })],
            ScalingModel::LogSquared => &[
                ("(ln r)^2", |_, r| r.ln() * r.ln()),
                ("ln r", |_, r| r.ln()),
                ("1", |_, _| 1.0),
            ],
            ScalingModel::LinearR => &[("r", |_, r| r), ("1", |_, _| 1.0)],
        }
    }

    pub fn evaluate(&self, coefficients: &[f64], n: f64, r: f64) -> f64 {
        self.terms()
            .iter()
            .zip(coefficients)
            .map(|((_, f), c)| c * f(n, r))
            .sum()
    }
}

impl fmt::Display for ScalingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScalingModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScalingModel::ALL
            .into_iter()
            .find(|m| m.name() == s.to_ascii_lowercase())
            .ok_or_else(|| {
                let names: Vec<_> = ScalingModel::ALL.iter().map(|m| m.name()).collect();
                Error::Domain(format!(
                    "unknown model '{s}' (expected {})",
                    names.join("|")
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingPoint {
    pub n: f64,
    pub r: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub model: ScalingModel,
    pub terms: Vec<&'static str>,
    #[serde(serialize_with = "crate::numfmt::vec::serialize")]
    pub fitted_coefficients: Vec<f64>,
    /// Coefficient of determination, clamped to `[0, 1]`.
    #[serde(serialize_with = "crate::numfmt::serialize")]
    pub r_squared: f64,
    /// Observed minus fitted, per input point.
    #[serde(serialize_with = "crate::numfmt::vec::serialize")]
    pub residuals: Vec<f64>,
}

impl ScalingFit {
    pub fn predict(&self, n: f64, r: f64) -> f64 {
        self.model.evaluate(&self.fitted_coefficients, n, r)
    }
}

/// Fits `model` to the cell means of `results`.
pub fn fit_scaling(results: &[AggregateResult], model: ScalingModel) -> Result<ScalingFit> {
    let points: Vec<ScalingPoint> = results
        .iter()
        .map(|a| ScalingPoint {
            n: a.n as f64,
            r: a.r as f64,
            value: a.mean,
        })
        .collect();
    fit_points(&points, model)
}

/// Unweighted least squares via a twice-orthogonalized Gram-Schmidt QR of
/// the column-normalized design.
pub fn fit_points(points: &[ScalingPoint], model: ScalingModel) -> Result<ScalingFit> {
    let terms = model.terms();
    let m = points.len();
    let p = terms.len();
    if m < 4 {
        return domain(format!("need at least 4 cells to fit, got {m}"));
    }
    if p >= m {
        return domain(format!(
            "model '{model}' has {p} coefficients for only {m} cells"
        ));
    }
    if let Some(bad) = points.iter().find(|pt| !pt.value.is_finite()) {
        return domain(format!(
            "cell (n={}, r={}) has no finite mean (all runs capped?)",
            bad.n, bad.r
        ));
    }

    let y: Vec<f64> = points.iter().map(|pt| pt.value).collect();
    let mut cols: Vec<Vec<f64>> = terms
        .iter()
        .map(|(_, f)| points.iter().map(|pt| f(pt.n, pt.r)).collect())
        .collect();
    let mut scale = vec![0.0; p];
    for (j, col) in cols.iter_mut().enumerate() {
        let norm = dot(col, col).sqrt();
        if norm.is_nan() || norm <= 0.0 || !norm.is_finite() {
            return Err(Error::Degenerate(format!(
                "term '{}' is zero or non-finite on every cell",
                terms[j].0
            )));
        }
        col.iter_mut().for_each(|v| *v /= norm);
        scale[j] = norm;
    }

    let mut q: Vec<Vec<f64>> = Vec::with_capacity(p);
    let mut rmat = vec![vec![0.0; p]; p];
    for j in 0..p {
        let mut v = cols[j].clone();
        for _ in 0..2 {
            for i in 0..j {
                let c = dot(&q[i], &v);
                rmat[i][j] += c;
                axpy(&mut v, -c, &q[i]);
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm < RANK_TOL {
            let partners: Vec<&str> = (0..j)
                .filter(|&i| rmat[i][j].abs() > 1e-8)
                .map(|i| terms[i].0)
                .collect();
            return Err(Error::Degenerate(format!(
                "term '{}' is collinear with [{}] on these cells",
                terms[j].0,
                partners.join(", ")
            )));
        }
        rmat[j][j] = norm;
        v.iter_mut().for_each(|x| *x /= norm);
        q.push(v);
    }

    let qty: Vec<f64> = q.iter().map(|qi| dot(qi, &y)).collect();
    let mut beta = vec![0.0; p];
    for j in (0..p).rev() {
        let tail: f64 = ((j + 1)..p).map(|k| rmat[j][k] * beta[k]).sum();
        beta[j] = (qty[j] - tail) / rmat[j][j];
    }
    let coefficients: Vec<f64> = beta.iter().zip(&scale).map(|(b, s)| b / s).collect();

    let residuals: Vec<f64> = points
        .iter()
        .map(|pt| pt.value - model.evaluate(&coefficients, pt.n, pt.r))
        .collect();
    let mean = y.iter().sum::<f64>() / m as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = residuals.iter().map(|e| e * e).sum();
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else if ss_res <= f64::EPSILON * dot(&y, &y) {
        1.0
    } else {
        0.0
    };

    Ok(ScalingFit {
        model,
        terms: terms.iter().map(|(name, _)| *name).collect(),
        fitted_coefficients: coefficients,
        r_squared,
        residuals,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += a * xi);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(model: ScalingModel, coef: &[f64], cells: &[(f64, f64)]) -> Vec<ScalingPoint> {
        cells
            .iter()
            .map(|&(n, r)| ScalingPoint {
                n,
                r,
                value: model.evaluate(coef, n, r),
            })
            .collect()
    }

    #[test]
    fn recovers_exact_coefficients() {
        let cells: Vec<(f64, f64)> = [50.0, 100.0, 200.0]
            .iter()
            .flat_map(|&n| [3.0, 5.0, 9.0].map(|r| (n, r)))
            .collect();
        for (model, coef) in [
            (ScalingModel::UniformLeading, vec![std::f64::consts::E]),
            (ScalingModel::UnitStrength, vec![1.7, 4.2]),
            (ScalingModel::HarmonicStrength, vec![0.9]),
            (ScalingModel::LogSquared, vec![2.0, -1.0, 3.0]),
            (ScalingModel::LinearR, vec![5.0, 11.0]),
        ] {
            let fit = fit_points(&pts(model, &coef, &cells), model).unwrap();
            for (a, b) in fit.fitted_coefficients.iter().zip(&coef) {
                assert!(
                    (a - b).abs() < 1e-9 * b.abs().max(1.0),
                    "{model}: {a} vs {b}"
                );
            }
            assert!(fit.r_squared > 1.0 - 1e-12);
            assert!(fit.residuals.iter().all(|e| e.abs() < 1e-6));
        }
    }

    #[test]
    fn matches_normal_equations_on_noisy_data() {
        // Two-parameter line fit; closed form from the normal equations.
        let data = [(1.0, 2.1), (2.0, 3.9), (3.0, 6.2), (4.0, 7.8), (5.0, 10.1)];
        let points: Vec<_> = data
            .iter()
            .map(|&(r, v)| ScalingPoint {
                n: 1.0,
                r,
                value: v,
            })
            .collect();
        let fit = fit_points(&points, ScalingModel::LinearR).unwrap();
        let m = data.len() as f64;
        let sx: f64 = data.iter().map(|d| d.0).sum();
        let sy: f64 = data.iter().map(|d| d.1).sum();
        let sxx: f64 = data.iter().map(|d| d.0 * d.0).sum();
        let sxy: f64 = data.iter().map(|d| d.0 * d.1).sum();
        let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        let icpt = (sy - slope * sx) / m;
        assert!((fit.fitted_coefficients[0] - slope).abs() < 1e-12);
        assert!((fit.fitted_coefficients[1] - icpt).abs() < 1e-12);
        assert!(fit.r_squared > 0.99 && fit.r_squared <= 1.0);
    }

    #[test]
    fn rank_deficiency_names_terms() {
        // With n fixed, `n r` and `n ln n` are not separable from a constant,
        // but here r is constant too so `n r` and `n ln n` are parallel.
        let points: Vec<_> = (0..5)
            .map(|i| ScalingPoint {
                n: 10.0,
                r: 4.0,
                value: i as f64,
            })
            .collect();
        match fit_points(&points, ScalingModel::UnitStrength) {
            Err(Error::Degenerate(msg)) => {
                assert!(msg.contains("n ln n") && msg.contains("n r"), "{msg}")
            }
            other => panic!("expected degeneracy, got {other:?}"),
        }
    }

    #[test]
    fn too_few_cells_or_too_many_coefficients() {
        let three = pts(
            ScalingModel::LinearR,
            &[1.0, 0.0],
            &[(1.0, 2.0), (1.0, 3.0), (1.0, 4.0)],
        );
        assert!(matches!(
            fit_points(&three, ScalingModel::LinearR),
            Err(Error::Domain(_))
        ));
        let four = pts(
            ScalingModel::LinearR,
            &[1.0, 0.0],
            &[(1.0, 2.0), (1.0, 3.0), (1.0, 4.0), (1.0, 5.0)],
        );
        assert!(fit_points(&four, ScalingModel::LinearR).is_ok());
        assert!(fit_points(&four, ScalingModel::LogSquared).is_ok());
    }

    #[test]
    fn model_names_parse() {
        for m in ScalingModel::ALL {
            assert_eq!(m.name().parse::<ScalingModel>().unwrap(), m);
        }
        assert!("cubic".parse::<ScalingModel>().is_err());
    }
}
