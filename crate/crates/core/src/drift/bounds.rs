//! Hitting-time bounds from multiplicative and variable drift.

use crate::error::{domain, Result};

pub const EULER_MASCHERONI: f64 = 0.577_215_664_901_532_9;

const EXACT_HARMONIC_LIMIT: u64 = 1_000_000;
const QUADRATURE_RTOL: f64 = 1e-9;
const QUADRATURE_MAX_DEPTH: u32 = 60;

/// Parameters shared by the multiplicative drift bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftBoundInputs {
    /// Initial potential.
    pub s0: f64,
    /// Smallest positive potential.
    pub s_min: f64,
    /// Level whose first passage the lower bound is about.
    pub s_aim: f64,
    /// Relative drift.
    pub delta: f64,
    /// Tail parameter of the lower bound.
    pub beta: f64,
}

impl DriftBoundInputs {
    pub fn upper(s0: f64, s_min: f64, delta: f64) -> Self {
        Self {
            s0,
            s_min,
            s_aim: 1.0,
            delta,
            beta: 0.0,
        }
    }

    pub fn lower(s0: f64, s_aim: f64, delta: f64, beta: f64) -> Self {
        Self {
            s0,
            s_min: 1.0,
            s_aim,
            delta,
            beta,
        }
    }

    fn check_delta(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return domain(format!("delta must lie in (0, 1], got {}", self.delta));
        }
        Ok(())
    }
}

/// `(ln(s0 / s_min) + 1) / delta`.
pub fn multiplicative_drift_upper_bound(inputs: &DriftBoundInputs) -> Result<f64> {
    inputs.check_delta()?;
    if inputs.s_min.is_nan() || inputs.s_min <= 0.0 {
        return domain(format!("s_min must be positive, got {}", inputs.s_min));
    }
    if inputs.s0 < inputs.s_min {
        return domain(format!("s0 = {} below s_min = {}", inputs.s0, inputs.s_min));
    }
    Ok(((inputs.s0 / inputs.s_min).ln() + 1.0) / inputs.delta)
}

/// Both forms of the multiplicative lower bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBound {
    /// `(ln s0 - ln s_aim) / delta * (1 - beta) / (1 + beta)`.
    pub sharp: f64,
    /// `(ln s0 - ln s_aim) / delta * (1 - 2 beta)`, never larger than `sharp`.
    pub weakened: f64,
}

pub fn multiplicative_drift_lower_bound(inputs: &DriftBoundInputs) -> Result<LowerBound> {
    inputs.check_delta()?;
    // beta = 0 is accepted as the limiting case of the formula.
    if !(0.0..=1.0).contains(&inputs.beta) {
        return domain(format!("beta must lie in [0, 1], got {}", inputs.beta));
    }
    if inputs.s_aim < 1.0 {
        return domain(format!("s_aim must be >= 1, got {}", inputs.s_aim));
    }
    if inputs.s_aim > inputs.s0 {
        return domain(format!(
            "s_aim = {} exceeds s0 = {}",
            inputs.s_aim, inputs.s0
        ));
    }
    let base = (inputs.s0.ln() - inputs.s_aim.ln()) / inputs.delta;
    let b = inputs.beta;
    Ok(LowerBound {
        sharp: base * (1.0 - b) / (1.0 + b),
        weakened: base * (1.0 - 2.0 * b),
    })
}

/// Lower bound for a level-dependent drift `delta(s)` after cutting the
/// process at `s_cut`: `(ln s_cut - ln s_aim) / delta_max * (1 - 2 beta)` with
/// `delta_max` the largest `delta(s)` over the `levels` in `(s_aim, s_cut]`.
pub fn level_dependent_lower_bound<I, D>(
    s_aim: f64,
    s_cut: f64,
    beta: f64,
    levels: I,
    delta: D,
) -> Result<f64>
where
    I: IntoIterator<Item = f64>,
    D: Fn(f64) -> f64,
{
    if !(0.0..=1.0).contains(&beta) {
        return domain(format!("beta must lie in [0, 1], got {beta}"));
    }
    if s_aim < 1.0 || s_cut <= s_aim {
        return domain(format!("need 1 <= s_aim < s_cut, got {s_aim}, {s_cut}"));
    }
    let mut delta_max: Option<f64> = None;
    for s in levels.into_iter().filter(|&s| s > s_aim && s <= s_cut) {
        let d = delta(s);
        if !(d > 0.0 && d <= 1.0) {
            return domain(format!("delta({s}) = {d} outside (0, 1]"));
        }
        delta_max = Some(delta_max.map_or(d, |m: f64| m.max(d)));
    }
    let Some(delta_max) = delta_max else {
        return domain("no level lies in (s_aim, s_cut]");
    };
    Ok((s_cut.ln() - s_aim.ln()) / delta_max * (1.0 - 2.0 * beta))
}

/// `x_min / h(x_min) + integral_{x_min}^{s0} 1/h(x) dx` by adaptive Simpson.
pub fn variable_drift_upper_bound<H>(s0: f64, x_min: f64, h: H) -> Result<f64>
where
    H: Fn(f64) -> f64,
{
    if x_min.is_nan() || x_min <= 0.0 || !x_min.is_finite() {
        return domain(format!("x_min must be positive, got {x_min}"));
    }
    if s0.is_nan() || s0 < x_min || !s0.is_finite() {
        return domain(format!("need x_min <= s0, got {x_min} and {s0}"));
    }
    let inv = |x: f64| -> Result<f64> {
        let v = h(x);
        if v.is_nan() || v <= 0.0 || !v.is_finite() {
            return domain(format!("h({x}) = {v} is not positive"));
        }
        Ok(1.0 / v)
    };
    let head = x_min * inv(x_min)?;
    if s0 == x_min {
        return Ok(head);
    }
    Ok(head + adaptive_simpson(&inv, x_min, s0)?)
}

/// Integrates to relative tolerance `QUADRATURE_RTOL`. The first pass uses
/// the crude three-point estimate as scale, which can overshoot badly for
/// integrands like `1/x` on long ranges, so passes repeat with the refined
/// value as scale until it stops shrinking.
fn adaptive_simpson<F>(f: &F, a: f64, b: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let crude = (b - a) / 6.0 * (f(a)? + 4.0 * f(0.5 * (a + b))? + f(b)?);
    let mut tol = QUADRATURE_RTOL * crude.abs().max(f64::MIN_POSITIVE);
    let mut value = simpson_to(f, a, b, tol)?;
    for _ in 0..8 {
        let want = QUADRATURE_RTOL * value.abs();
        if want == 0.0 || tol <= 2.0 * want {
            break;
        }
        tol = want;
        value = simpson_to(f, a, b, tol)?;
    }
    Ok(value)
}

fn simpson_to<F>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    struct Segment {
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        eps: f64,
        depth: u32,
    }
    let simpson = |a: f64, b: f64, fa: f64, fm: f64, fb: f64| (b - a) / 6.0 * (fa + 4.0 * fm + fb);

    let (fa, fm, fb) = (f(a)?, f(0.5 * (a + b))?, f(b)?);
    let whole = simpson(a, b, fa, fm, fb);
    let mut stack = vec![Segment {
        a,
        b,
        fa,
        fm,
        fb,
        whole,
        eps: tol,
        depth: 0,
    }];
    let mut total = 0.0;
    while let Some(s) = stack.pop() {
        let m = 0.5 * (s.a + s.b);
        let (lm, rm) = (0.5 * (s.a + m), 0.5 * (m + s.b));
        let (flm, frm) = (f(lm)?, f(rm)?);
        let left = simpson(s.a, m, s.fa, flm, s.fm);
        let right = simpson(m, s.b, s.fm, frm, s.fb);
        let err = left + right - s.whole;
        if s.depth >= QUADRATURE_MAX_DEPTH || err.abs() <= 15.0 * s.eps {
            total += left + right + err / 15.0;
        } else {
            let eps = 0.5 * s.eps;
            stack.push(Segment {
                a: s.a,
                b: m,
                fa: s.fa,
                fm: flm,
                fb: s.fm,
                whole: left,
                eps,
                depth: s.depth + 1,
            });
            stack.push(Segment {
                a: m,
                b: s.b,
                fa: s.fm,
                fm: frm,
                fb: s.fb,
                whole: right,
                eps,
                depth: s.depth + 1,
            });
        }
    }
    Ok(total)
}

/// `H_k = sum_{i=1}^k 1/i`; exact partial sum up to `k = 10^6`, asymptotic
/// expansion beyond.
pub fn harmonic_number(k: u64) -> Result<f64> {
    if k < 1 {
        return domain("harmonic number needs k >= 1");
    }
    if k <= EXACT_HARMONIC_LIMIT {
        return Ok((1..=k).rev().map(|i| 1.0 / i as f64).sum());
    }
    let x = k as f64;
    let inv2 = 1.0 / (x * x);
    Ok(x.ln() + EULER_MASCHERONI + 0.5 / x - inv2 / 12.0 + inv2 * inv2 / 120.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn upper_bound_examples() {
        let v =
            multiplicative_drift_upper_bound(&DriftBoundInputs::upper(100.0, 1.0, 0.1)).unwrap();
        assert!(close(v, (100f64.ln() + 1.0) / 0.1, 1e-15));
        assert!((v - 56.0517).abs() < 1e-4);
        let v = multiplicative_drift_upper_bound(&DriftBoundInputs::upper(3.0, 3.0, 0.25)).unwrap();
        assert!(close(v, 4.0, 1e-15));
        let v =
            multiplicative_drift_upper_bound(&DriftBoundInputs::upper(E * 2.0, 2.0, 1.0)).unwrap();
        assert!(close(v, 2.0, 1e-15));
    }

    #[test]
    fn upper_bound_rejects_bad_inputs() {
        assert!(multiplicative_drift_upper_bound(&DriftBoundInputs::upper(1.0, 2.0, 0.5)).is_err());
        assert!(multiplicative_drift_upper_bound(&DriftBoundInputs::upper(2.0, 1.0, 0.0)).is_err());
        assert!(multiplicative_drift_upper_bound(&DriftBoundInputs::upper(2.0, 1.0, 1.5)).is_err());
        assert!(multiplicative_drift_upper_bound(&DriftBoundInputs::upper(2.0, 0.0, 0.5)).is_err());
    }

    #[test]
    fn lower_bound_examples() {
        let lb =
            multiplicative_drift_lower_bound(&DriftBoundInputs::lower(E * E * 3.0, 3.0, 0.5, 0.0))
                .unwrap();
        assert!(close(lb.sharp, 4.0, 1e-14));
        let lb = multiplicative_drift_lower_bound(&DriftBoundInputs::lower(100.0, 1.0, 0.1, 0.1))
            .unwrap();
        assert!(close(lb.sharp, 100f64.ln() / 0.1 * 0.9 / 1.1, 1e-15));
        assert!((lb.sharp - 37.68).abs() < 0.01);
        assert!(close(lb.weakened, 100f64.ln() / 0.1 * 0.8, 1e-15));
    }

    #[test]
    fn lower_bound_rejects_aim_above_start() {
        assert!(
            multiplicative_drift_lower_bound(&DriftBoundInputs::lower(5.0, 6.0, 0.5, 0.1)).is_err()
        );
        assert!(
            multiplicative_drift_lower_bound(&DriftBoundInputs::lower(5.0, 2.0, 0.5, 1.5)).is_err()
        );
    }

    #[test]
    fn weakened_never_exceeds_sharp() {
        for i in 1..=1000 {
            let beta = i as f64 / 1000.0;
            let lb =
                multiplicative_drift_lower_bound(&DriftBoundInputs::lower(500.0, 2.0, 0.3, beta))
                    .unwrap();
            assert!(lb.weakened <= lb.sharp + 1e-12, "beta={beta}");
        }
    }

    #[test]
    fn level_dependent_uses_largest_delta() {
        let v = level_dependent_lower_bound(2.0, 50.0, 0.1, (1..=100).map(|s| s as f64), |s| {
            0.01 + s / 10_000.0
        })
        .unwrap();
        let want = (50f64.ln() - 2f64.ln()) / (0.01 + 50.0 / 10_000.0) * 0.8;
        assert!(close(v, want, 1e-14));
        assert!(level_dependent_lower_bound(2.0, 3.0, 0.1, [10.0], |_| 0.5).is_err());
        assert!(level_dependent_lower_bound(2.0, 5.0, 0.1, [3.0], |_| 1.5).is_err());
    }

    #[test]
    fn variable_drift_multiplicative_case() {
        for (s0, delta) in [(100.0, 0.1), (7.5, 0.9), (1e6, 0.01)] {
            let v = variable_drift_upper_bound(s0, 1.0, |s| delta * s).unwrap();
            let closed = 1.0 / delta + f64::ln(s0) / delta;
            assert!(close(v, closed, 1e-6), "{v} vs {closed}");
            let mult =
                multiplicative_drift_upper_bound(&DriftBoundInputs::upper(s0, 1.0, delta)).unwrap();
            assert!(close(v, mult, 1e-6));
        }
    }

    #[test]
    fn variable_drift_additive_case() {
        let v = variable_drift_upper_bound(40.0, 1.0, |_| 2.5).unwrap();
        assert!(close(v, 40.0 / 2.5, 1e-9));
    }

    #[test]
    fn variable_drift_piecewise_ea_bound() {
        let (n, r) = (10.0f64, 4.0f64);
        let c = E * (r - 1.0) * n;
        let h = |s: f64| {
            if s >= 2.0 * n {
                s * s / (2.0 * c * n)
            } else {
                s / c
            }
        };
        let v = variable_drift_upper_bound((r - 1.0) * n, 1.0, h).unwrap();
        // Closed form of the same integral, split at 2n.
        let exact =
            c + c * (2.0 * n).ln() + 2.0 * c * n * (1.0 / (2.0 * n) - 1.0 / ((r - 1.0) * n));
        assert!(close(v, exact, 1e-6), "{v} vs {exact}");
        assert!(v <= c * n.ln() + (2.0 + 2f64.ln()) * c);
    }

    #[test]
    fn variable_drift_rejects_nonpositive_h() {
        assert!(variable_drift_upper_bound(10.0, 1.0, |s| s - 5.0).is_err());
        assert!(variable_drift_upper_bound(0.5, 1.0, |s| s).is_err());
    }

    #[test]
    fn harmonic_examples() {
        assert_eq!(harmonic_number(1).unwrap(), 1.0);
        assert_eq!(harmonic_number(2).unwrap(), 1.5);
        assert!((harmonic_number(20).unwrap() - 3.597_739_657_143_682).abs() < 1e-12);
        assert!(harmonic_number(0).is_err());
    }

    #[test]
    fn harmonic_log_sandwich_and_gap_monotone() {
        let mut h = 0.0;
        let mut prev_gap = f64::INFINITY;
        for k in 1..=100_000u64 {
            h += 1.0 / k as f64;
            let lk = (k as f64).ln();
            assert!(lk <= h && h <= lk + 1.0);
            let gap = h - lk;
            assert!(gap < prev_gap, "k={k}");
            assert!(gap > EULER_MASCHERONI);
            prev_gap = gap;
        }
        assert!((prev_gap - EULER_MASCHERONI) < 1e-5);
        assert!((harmonic_number(100_000).unwrap() - h).abs() < 1e-10);
    }

    #[test]
    fn harmonic_asymptotic_branch_continuous() {
        let exact: f64 = (1..=1_000_001u64).rev().map(|i| 1.0 / i as f64).sum();
        assert!((harmonic_number(1_000_001).unwrap() - exact).abs() < 1e-12);
    }
}
