use levy_coupling_core::estimators::{
    coupling_survival, estimate_semigroup, ks_two_sample, Executor as _, Sequential,
};
use levy_coupling_core::kernels::{CoefficientField, LevyMeasureSpec};
use levy_coupling_core::quadrature::{QuadratureConfig, Wave};
use levy_coupling_core::simulator::{SimParams, Simulator};

fn params(horizon: f64, seed: u64) -> SimParams {
    SimParams {
        horizon,
        master_seed: seed,
        ..SimParams::default()
    }
}

#[test]
fn event_count_is_poisson() {
    let spec = LevyMeasureSpec::truncated(1, 1.5, 1.0, 2.0).unwrap();
    let field = CoefficientField::constant(1, 1.5).unwrap();
    let p = SimParams { jump_cutoff: 0.05, ..params(0.5, 3) };
    let sim = Simulator::new(&spec, &field, p, &QuadratureConfig::default()).unwrap();
    let n = 4000;
    let mut total = 0u64;
    for i in 0..n {
        let path = sim.single(&[0.0], i, &[]).unwrap();
        assert_eq!(path.proposals, path.accepted);
        total += path.accepted;
    }
    let lt = sim.rate() * 0.5;
    let mean = total as f64 / n as f64;
    assert!((mean - lt).abs() <= 3.0 * (lt / n as f64).sqrt(), "mean {mean} vs Λt {lt}");
}

#[test]
fn symmetric_endpoint_has_zero_mean() {
    let spec = LevyMeasureSpec::truncated(1, 1.5, 1.0, 2.0).unwrap();
    let field = CoefficientField::constant(1, 1.0).unwrap();
    let sim = Simulator::new(&spec, &field, params(1.0, 5), &QuadratureConfig::default()).unwrap();
    let n = 4000;
    let ends: Vec<f64> = (0..n).map(|i| sim.single(&[0.0], i, &[]).unwrap().endpoint[0]).collect();
    let mean = ends.iter().sum::<f64>() / n as f64;
    let var = ends.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
    let se = (var / n as f64).sqrt();
    assert!(mean.abs() <= 3.0 * se, "mean {mean}, se {se}");
}

#[test]
fn odd_function_at_the_origin() {
    let spec = LevyMeasureSpec::truncated(1, 1.2, 1.0, 2.0).unwrap();
    let field = CoefficientField::constant(1, 1.0).unwrap();
    let sim = Simulator::new(&spec, &field, params(0.5, 9), &QuadratureConfig::default()).unwrap();
    let est = estimate_semigroup(&sim, &Wave::sine(&[1.0]), &[0.0], &[0.1, 0.25, 0.5], 3000, &Sequential).unwrap();
    for e in &est {
        assert!(e.value.abs() <= 3.0 * e.stderr, "t={}: {} ± {}", e.t, e.value, e.stderr);
    }
}

#[test]
fn coupling_survival_regression() {
    // pilot: n = 4000, seed 0, P(T > 0.02) = 0.26075
    let spec = LevyMeasureSpec::homogeneous(1, 1.5, 1.0).unwrap();
    let field = CoefficientField::constant(1, 1.0).unwrap();
    let sim = Simulator::new(&spec, &field, params(0.1, 0), &QuadratureConfig::default()).unwrap();
    let grid = [0.02, 0.04, 0.06, 0.08, 0.1];
    let s = coupling_survival(&sim, &[0.0], &[0.05], &grid, 4000, &Sequential).unwrap();
    let first = &s[0];
    assert!(
        (first.survival - 0.26075).abs() <= 4.0 * first.stderr,
        "P(T > 0.02) = {} ± {}",
        first.survival,
        first.stderr
    );
    assert!(first.survival < 0.5);
    assert!(s.windows(2).all(|w| w[1].survival <= w[0].survival));
    assert!(s.iter().all(|p| (0.0..=1.0).contains(&p.survival) && p.lower <= p.survival && p.survival <= p.upper));

    let merged = coupling_survival(&sim, &[0.3], &[0.3], &grid, 200, &Sequential).unwrap();
    assert!(merged.iter().all(|p| p.survival == 0.0));
}

#[test]
fn ks_between_independent_batches() {
    // independent batches of the same law; D < 1.95 sqrt(2/n) in at least 99%
    let spec = LevyMeasureSpec::truncated(1, 1.5, 1.0, 2.0).unwrap();
    let field = CoefficientField::sinusoidal(1, 2.0, 1.0, 1.0).unwrap();
    let p = SimParams { jump_cutoff: 0.1, ..params(0.2, 0) };
    let sim = Simulator::new(&spec, &field, p, &QuadratureConfig::default()).unwrap();
    let n = 10_000u64;
    let reps = 100u64;
    let threshold = 1.95 * (2.0 / n as f64).sqrt();
    let exceed = Sequential
        .map(reps, |r| {
            let batch = |offset: u64| -> Vec<f64> {
                (0..n).map(|i| sim.single(&[0.0], offset + i, &[]).unwrap().endpoint[0]).collect()
            };
            let a = batch(2 * r * n);
            let b = batch((2 * r + 1) * n);
            ks_two_sample(&a, &b).unwrap() >= threshold
        })
        .into_iter()
        .filter(|&e| e)
        .count();
    assert!(exceed <= 1, "{exceed} of {reps} repetitions exceeded {threshold}");
}
