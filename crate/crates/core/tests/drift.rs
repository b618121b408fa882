use rvalued::drift::{estimate_drift, Conditioning, DriftEstimate, Level, PotentialKind};
use rvalued::{
    metric_distance, AlgorithmKind, MetricKind, ProblemInstance, RunConfig, SpaceParams,
    StepOperatorKind, ValueVector,
};

const Z95: f64 = 1.959964;

fn instance(n: usize, r: u64, metric: MetricKind) -> ProblemInstance {
    let params = SpaceParams::new(n, r).unwrap();
    ProblemInstance::new(params, metric, ValueVector::filled(&params, 0).unwrap()).unwrap()
}

/// Within `z` standard errors.
fn near(est: &DriftEstimate, want: f64, z: f64) -> bool {
    (est.mean_drop - want).abs() <= z * est.confidence_halfwidth / Z95 + 1e-12
}

#[test]
fn rls_hamming_drift_is_linear_in_level() {
    for n in [10usize, 50] {
        for r in [3u64, 8] {
            let levels = vec![1, n / 2, n];
            let cfg = RunConfig::new(
                AlgorithmKind::Rls,
                StepOperatorKind::Uniform,
                instance(n, r, MetricKind::Interval),
                n as u64 * 100 + r,
            );
            let est = estimate_drift(
                &cfg,
                PotentialKind::HammingToTarget,
                &Conditioning::PlantedHamming(levels.clone()),
                20_000,
            )
            .unwrap();
            assert_eq!(est.len(), 3);
            for (e, &k) in est.iter().zip(&levels) {
                assert_eq!(e.level, Level::Exact(k as u64));
                let want = k as f64 / (n as f64 * (r - 1) as f64);
                assert!(near(e, want, 4.0), "n={n} r={r} k={k}: {e:?} vs {want}");
            }
        }
    }
}

#[test]
fn exponential_potential_drift_under_rls_pm1() {
    // Only the move towards the target survives selection, so a state with
    // distances d_i drifts by (1 - 1/w)/(2n) * sum_{d_i > 0} w^{d_i}.
    let (n, r, w) = (6usize, 12u64, 1.25);
    let inst = instance(n, r, MetricKind::Interval);
    let states: Vec<ValueVector> = [
        vec![11, 0, 0, 0, 0, 0],
        vec![3, 3, 1, 0, 7, 2],
        vec![1, 1, 1, 1, 1, 1],
        vec![11, 10, 9, 8, 7, 6],
    ]
    .into_iter()
    .map(|v| ValueVector::new(inst.params(), v).unwrap())
    .collect();
    let cfg = RunConfig::new(AlgorithmKind::Rls, StepOperatorKind::PlusMinusOne, inst, 8);
    let est = estimate_drift(
        &cfg,
        PotentialKind::exponential(w).unwrap(),
        &Conditioning::PlantedStates(states.clone()),
        40_000,
    )
    .unwrap();
    assert_eq!(est.len(), states.len());
    for e in &est {
        let Level::DistanceProfile(d) = &e.level else {
            panic!("expected a profile")
        };
        let g: f64 = d.iter().map(|&di| w.powi(di as i32) - 1.0).sum();
        let heavy: f64 = d
            .iter()
            .filter(|&&di| di > 0)
            .map(|&di| w.powi(di as i32))
            .sum();
        let want = (1.0 - 1.0 / w) / (2.0 * n as f64) * heavy;
        assert!(near(e, want, 4.0), "{e:?} vs {want}");
        assert!(want >= (1.0 - 1.0 / w) / (2.0 * n as f64) * g);
    }
}

/// Exact one-step fitness drift of the elitist (1+1) EA with the uniform
/// operator, by enumerating every offspring. Each position mutates
/// independently with probability 1/n and then moves to one of the other
/// r - 1 values.
fn ea_uniform_drift(x: &[u32], r: u32, metric: MetricKind) -> f64 {
    let n = x.len();
    let f = |y: &[u32]| -> u64 {
        y.iter()
            .map(|&v| metric_distance(metric, v, 0, r).unwrap())
            .sum()
    };
    let fx = f(x);
    let p = 1.0 / n as f64;
    let mut total = 0.0;
    let mut y = vec![0u32; n];
    let combos = (r as usize).pow(n as u32);
    for code in 0..combos {
        let mut c = code;
        let mut prob = 1.0;
        for i in 0..n {
            y[i] = (c % r as usize) as u32;
            c /= r as usize;
            prob *= if y[i] == x[i] {
                1.0 - p
            } else {
                p / (r - 1) as f64
            };
        }
        let fy = f(&y);
        if fy <= fx {
            total += prob * (fx - fy) as f64;
        }
    }
    total
}

#[test]
fn ea_uniform_drift_matches_enumeration() {
    for metric in [MetricKind::Interval, MetricKind::Ring] {
        let (n, r) = (5usize, 4u32);
        let inst = instance(n, r as u64, metric);
        let raw = [
            vec![3u32, 0, 0, 0, 0],
            vec![2, 2, 1, 0, 3],
            vec![1, 1, 1, 1, 1],
        ];
        for x in raw {
            let want = ea_uniform_drift(&x, r, metric);
            let v = ValueVector::new(inst.params(), x.clone()).unwrap();
            let cfg = RunConfig::new(
                AlgorithmKind::OnePlusOneEa,
                StepOperatorKind::Uniform,
                inst.clone(),
                31,
            );
            let est = estimate_drift(
                &cfg,
                PotentialKind::Fitness,
                &Conditioning::PlantedStates(vec![v]),
                100_000,
            )
            .unwrap();
            assert!(
                near(&est[0], want, 4.0),
                "{metric} {x:?}: {:?} vs {want}",
                est[0]
            );
        }
    }
}

#[test]
fn ea_uniform_fitness_drift_bound() {
    // Fixing one wrong component alone happens with probability at least
    // 1/(e n (r - 1)), giving drift >= s / (e (r - 1) n).
    let (n, r) = (10usize, 3u64);
    let inst = instance(n, r, MetricKind::Interval);
    let x = ValueVector::new(inst.params(), vec![2, 2, 2, 2, 2, 0, 0, 0, 0, 0]).unwrap();
    let s = 10.0;
    let cfg = RunConfig::new(
        AlgorithmKind::OnePlusOneEa,
        StepOperatorKind::Uniform,
        inst,
        12,
    );
    let est = estimate_drift(
        &cfg,
        PotentialKind::Fitness,
        &Conditioning::PlantedStates(vec![x]),
        50_000,
    )
    .unwrap();
    let bound = s / (std::f64::consts::E * (r - 1) as f64 * n as f64);
    assert_eq!(est[0].level, Level::Exact(10));
    assert!(est[0].mean_drop >= 0.85 * bound, "{:?} vs {bound}", est[0]);
}

#[test]
fn visited_states_cover_the_budget() {
    let cfg = RunConfig::new(
        AlgorithmKind::OnePlusOneEa,
        StepOperatorKind::Harmonic,
        instance(8, 16, MetricKind::Ring),
        5,
    );
    let est = estimate_drift(&cfg, PotentialKind::Fitness, &Conditioning::Visited, 5_000).unwrap();
    assert_eq!(est.iter().map(|e| e.samples).sum::<u64>(), 5_000);
    // Elitist selection never raises fitness.
    assert!(est.iter().all(|e| e.mean_drop >= 0.0));
    assert!(est.windows(2).all(|w| w[0].level < w[1].level));
}
