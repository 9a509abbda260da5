//! Monte Carlo estimators over simulated trajectories, rate fits and the
//! two-sample Kolmogorov-Smirnov statistic.
//!
//! Trajectory `i` always uses PRNG stream `i`, and every reduction runs over
//! trajectories in index order, so results do not depend on how an
//! [`Executor`] schedules the work.

use alloc::format;
use alloc::vec::Vec;

use crate::math::{self, Point};
use crate::quadrature::BoundedFunction;
use crate::simulator::Simulator;
use crate::{Error, Result};

/// Runs `f(0..n)` and returns the results in index order.
pub trait Executor {
    fn map<T, F>(&self, n: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send;
}

/// Runs everything on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, n: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}

pub const MIN_PATHS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub t: f64,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientEstimate {
    pub t: f64,
    /// `|mean(f(X'_t) - f(Y'_t))| / |x - y|`
    pub value: f64,
    pub stderr: f64,
    /// Empirical `P(T > t)`.
    pub survival: f64,
    pub survival_stderr: f64,
    /// `2 ‖f‖_∞ (P̂(T > t) + 3 stderr) / |x - y|`
    pub bound: f64,
}

impl GradientEstimate {
    pub fn within_bound(&self) -> bool {
        self.value <= self.bound
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalPoint {
    pub t: f64,
    pub survival: f64,
    pub stderr: f64,
    /// Wilson score interval at 95%.
    pub lower: f64,
    pub upper: f64,
}

fn check_paths(n: usize) -> Result<()> {
    if n < MIN_PATHS {
        return Err(Error::SampleTooSmall { needed: MIN_PATHS, got: n });
    }
    Ok(())
}

fn check_grid(sim: &Simulator<'_>, times: &[f64]) -> Result<()> {
    let h = sim.params().horizon;
    if times.is_empty() {
        return Err(Error::param("times", "no observation times"));
    }
    for w in times.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::param("times", "must be strictly increasing"));
        }
    }
    if !(times[0] >= 0.0 && times[times.len() - 1] <= h) {
        return Err(Error::param("times", format!("must lie in [0, {h}] (the horizon)")));
    }
    Ok(())
}

/// Mean and standard error; stderr is zero when all values coincide.
fn mean_stderr(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mut it = values.clone();
    if let Some(first) = it.next() {
        if it.all(|v| v == first) {
            return (first, 0.0);
        }
    }
    let mean = values.clone().sum::<f64>() / nf;
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    let var = if n > 1 { ss / (nf - 1.0) } else { 0.0 };
    (mean, math::sqrt(var / nf))
}

/// `P_t f(x) = E f(X_t)` at each observation time.
pub fn estimate_semigroup<F: BoundedFunction + Sync + ?Sized, E: Executor>(
    sim: &Simulator<'_>,
    f: &F,
    x: &[f64],
    times: &[f64],
    n_paths: usize,
    exec: &E,
) -> Result<Vec<MeanEstimate>> {
    check_paths(n_paths)?;
    check_grid(sim, times)?;
    let runs = exec.map(n_paths as u64, |i| {
        sim.single(x, i, times)
            .map(|p| p.snapshots.iter().map(|s| f.value(&s.x)).collect::<Vec<f64>>())
    });
    let rows = runs.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let (value, stderr) = mean_stderr(rows.iter().map(|r| r[k]), n_paths);
            MeanEstimate { t, value, stderr }
        })
        .collect())
}

/// Per-path record of a coupled run: `f(X'_t) - f(Y'_t)` and whether the
/// pair has met by `t`, for each observation time.
type CoupledRow = Vec<(f64, bool)>;

fn coupled_rows<F: BoundedFunction + Sync + ?Sized, E: Executor>(
    sim: &Simulator<'_>,
    f: &F,
    x: &[f64],
    y: &[f64],
    times: &[f64],
    n_paths: usize,
    exec: &E,
) -> Result<Vec<CoupledRow>> {
    let runs = exec.map(n_paths as u64, |i| {
        sim.coupled(x, y, i, times).map(|p| {
            p.snapshots
                .iter()
                .map(|s| (f.value(&s.x) - f.value(&s.y), s.coupled))
                .collect::<CoupledRow>()
        })
    });
    runs.into_iter().collect()
}

/// Coupled estimate of `|P_t f(x) - P_t f(y)| / |x - y|` with the coupling
/// bound `2 ‖f‖_∞ P(T > t) / |x - y|` it must respect.
pub fn estimate_gradient_modulus<F: BoundedFunction + Sync + ?Sized, E: Executor>(
    sim: &Simulator<'_>,
    f: &F,
    x: &[f64],
    y: &[f64],
    times: &[f64],
    n_paths: usize,
    exec: &E,
) -> Result<Vec<GradientEstimate>> {
    let r = math::norm(&math::sub(x, y));
    if r == 0.0 {
        return Err(Error::Precondition("estimate_gradient_modulus requires x != y".into()));
    }
    check_paths(n_paths)?;
    check_grid(sim, times)?;
    let rows = coupled_rows(sim, f, x, y, times, n_paths, exec)?;
    let sup = f.sup_norm();
    let nf = n_paths as f64;
    Ok(times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let (mean, se) = mean_stderr(rows.iter().map(|row| row[k].0), n_paths);
            let alive = rows.iter().filter(|row| !row[k].1).count() as f64 / nf;
            let alive_se = math::sqrt(alive * (1.0 - alive) / nf);
            GradientEstimate {
                t,
                value: mean.abs() / r,
                stderr: se / r,
                survival: alive,
                survival_stderr: alive_se,
                bound: 2.0 * sup * (alive + 3.0 * alive_se) / r,
            }
        })
        .collect())
}

/// Wilson score interval for `k` successes out of `n`.
pub fn wilson_interval(k: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * math::sqrt(p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)) / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Empirical `P(T > t)` on an increasing grid.
pub fn coupling_survival<E: Executor>(
    sim: &Simulator<'_>,
    x0: &[f64],
    y0: &[f64],
    t_grid: &[f64],
    n_paths: usize,
    exec: &E,
) -> Result<Vec<SurvivalPoint>> {
    check_paths(n_paths)?;
    check_grid(sim, t_grid)?;
    let times = exec.map(n_paths as u64, |i| sim.coupled(x0, y0, i, &[]).map(|p| p.coupling_time));
    let times = times.into_iter().collect::<Result<Vec<_>>>()?;
    let nf = n_paths as f64;
    Ok(t_grid
        .iter()
        .map(|&t| {
            let k = times.iter().filter(|c| c.map_or(true, |tc| tc > t)).count();
            let p = k as f64 / nf;
            let (lower, upper) = wilson_interval(k, n_paths, 1.96);
            SurvivalPoint {
                t,
                survival: p,
                stderr: math::sqrt(p * (1.0 - p) / nf),
                lower,
                upper,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    /// `(t, value, stderr)` of the points used.
    pub points: Vec<(f64, f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    /// 95% confidence half-width of the slope.
    pub half_width: f64,
    pub predicted: f64,
    pub tolerance: f64,
    pub agrees: bool,
}

/// Two-sided 97.5% Student-t quantiles for 1..=30 degrees of freedom.
const T975: [f64; 30] = [
    12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179, 2.160, 2.145, 2.131, 2.120,
    2.110, 2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042,
];

fn t975(df: usize) -> f64 {
    match df {
        0 => f64::INFINITY,
        1..=30 => T975[df - 1],
        _ => {
            let z = 1.959_963_984_540_054;
            let n = df as f64;
            z + (z * z * z + z) / (4.0 * n)
        }
    }
}

/// Least-squares slope of `ln value` against `ln t` over the points with
/// `value > 3 stderr`; at least four are required.
pub fn fit_rate(points: &[(f64, f64, f64)], predicted: f64, tolerance: f64) -> Result<RateFit> {
    let used: Vec<(f64, f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(t, v, se)| t > 0.0 && v > 0.0 && v > 3.0 * se)
        .collect();
    if used.len() < 4 {
        return Err(Error::InsufficientPoints {
            needed: 4,
            got: used.len(),
        });
    }
    let n = used.len() as f64;
    let xs: Vec<f64> = used.iter().map(|p| math::ln(p.0)).collect();
    let ys: Vec<f64> = used.iter().map(|p| math::ln(p.1)).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::param("points", "all times coincide"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - intercept - slope * x;
            e * e
        })
        .sum();
    let df = used.len() - 2;
    let half_width = t975(df) * math::sqrt(rss / df as f64 / sxx);
    Ok(RateFit {
        points: used,
        slope,
        intercept,
        half_width,
        predicted,
        tolerance,
        agrees: (slope - predicted).abs() <= tolerance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Trend {
    Increasing,
    Decreasing,
    Flat,
    Mixed,
}

/// Direction of `value · t^{-exponent}` along increasing `t`: the
/// power-law-compensated sequence, which isolates slowly varying factors.
pub fn compensated_trend(points: &[(f64, f64)], exponent: f64) -> Trend {
    let comp: Vec<f64> = points
        .iter()
        .filter(|p| p.0 > 0.0 && p.1 > 0.0)
        .map(|&(t, v)| v * math::powf(t, -exponent))
        .collect();
    let (mut up, mut down) = (false, false);
    for w in comp.windows(2) {
        if w[1] > w[0] {
            up = true;
        } else if w[1] < w[0] {
            down = true;
        }
    }
    match (up, down) {
        (true, false) => Trend::Increasing,
        (false, true) => Trend::Decreasing,
        (false, false) => Trend::Flat,
        (true, true) => Trend::Mixed,
    }
}

/// Two-sample Kolmogorov-Smirnov statistic `sup_s |F_a(s) - F_b(s)|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    for s in [a, b] {
        if s.len() < MIN_PATHS {
            return Err(Error::SampleTooSmall {
                needed: MIN_PATHS,
                got: s.len(),
            });
        }
        if s.iter().any(|v| v.is_nan()) {
            return Err(Error::param("sample", "contains NaN"));
        }
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let s = a[i].min(b[j]);
        while i < a.len() && a[i] <= s {
            i += 1;
        }
        while j < b.len() && b[j] <= s {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// `⟨p, direction⟩` for each state.
pub fn project(states: &[Point], direction: &[f64]) -> Result<Vec<f64>> {
    if states.iter().any(|s| s.len() != direction.len()) {
        return Err(Error::Precondition("projection direction has the wrong dimension".into()));
    }
    Ok(states.iter().map(|s| math::dot(s, direction)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{CoefficientField, LevyMeasureSpec};
    use crate::quadrature::{Constant, QuadratureConfig, Wave};
    use crate::simulator::SimParams;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (LevyMeasureSpec, CoefficientField) {
        (
            LevyMeasureSpec::truncated(1, 1.5, 1.0, 2.0).unwrap(),
            CoefficientField::sinusoidal(1, 2.0, 1.0, 1.0).unwrap(),
        )
    }

    #[test]
    fn ks_extremes() {
        let a: Vec<f64> = (0..200).map(|i| i as f64).collect();
        assert_eq!(ks_two_sample(&a, &a).unwrap(), 0.0);
        let b: Vec<f64> = (0..150).map(|i| 1000.0 + i as f64).collect();
        assert_eq!(ks_two_sample(&a, &b).unwrap(), 1.0);
        assert!(matches!(ks_two_sample(&a[..50], &b), Err(Error::SampleTooSmall { .. })));
    }

    #[test]
    fn ks_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a: Vec<f64> = (0..300).map(|_| (rng.random::<f64>() * 20.0).floor()).collect();
        let b: Vec<f64> = (0..250).map(|_| (rng.random::<f64>() * 22.0).floor()).collect();
        let mut brute: f64 = 0.0;
        for &s in a.iter().chain(&b) {
            let fa = a.iter().filter(|&&v| v <= s).count() as f64 / a.len() as f64;
            let fb = b.iter().filter(|&&v| v <= s).count() as f64 / b.len() as f64;
            brute = brute.max((fa - fb).abs());
        }
        assert!((ks_two_sample(&a, &b).unwrap() - brute).abs() < 1e-15);
    }

    #[test]
    fn noiseless_power_law_fit() {
        let pts: Vec<_> = [0.05, 0.1, 0.2, 0.4, 0.8].iter().map(|&t: &f64| (t, t.powf(-0.5), 0.0)).collect();
        let fit = fit_rate(&pts, -0.5, 0.05).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12 && fit.half_width < 1e-10 && fit.agrees);
        assert!(fit_rate(&pts[..3], -0.5, 0.05).is_err());
    }

    #[test]
    fn noisy_power_law_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let pts: Vec<_> = (0..12)
            .map(|i| {
                let t = 0.02 * 1.5f64.powi(i);
                let noise = 1.0 + 0.05 * (2.0 * rng.random::<f64>() - 1.0);
                (t, 3.0 * t.powf(-0.7) * noise, 0.0)
            })
            .collect();
        let fit = fit_rate(&pts, -0.7, 0.05).unwrap();
        assert!(fit.agrees, "{}", fit.slope);
    }

    #[test]
    fn wilson_brackets_the_estimate() {
        let (lo, hi) = wilson_interval(30, 100, 1.96);
        assert!(lo < 0.3 && 0.3 < hi);
        assert_eq!(wilson_interval(0, 50, 1.96).0, 0.0);
    }

    #[test]
    fn semigroup_trivial_cases() {
        let (spec, field) = setup();
        let p = SimParams {
            horizon: 0.5,
            ..SimParams::default()
        };
        let sim = Simulator::new(&spec, &field, p, &QuadratureConfig::default()).unwrap();
        let one = estimate_semigroup(&sim, &Constant(1.0), &[0.2], &[0.0, 0.5], 200, &Sequential).unwrap();
        assert!(one.iter().all(|e| e.value == 1.0 && e.stderr == 0.0));
        let w = Wave::cosine(&[1.0]);
        let at0 = estimate_semigroup(&sim, &w, &[0.2], &[0.0], 200, &Sequential).unwrap();
        assert_eq!(at0[0].value, 0.2f64.cos());
        assert_eq!(at0[0].stderr, 0.0);
    }

    #[test]
    fn gradient_respects_coupling_bound() {
        let (spec, field) = setup();
        let p = SimParams {
            horizon: 0.4,
            kappa: 1.0,
            ..SimParams::default()
        };
        let sim = Simulator::new(&spec, &field, p, &QuadratureConfig::default()).unwrap();
        let w = Wave::sine(&[3.0]);
        let times = [0.0, 0.1, 0.2, 0.4];
        let g = estimate_gradient_modulus(&sim, &w, &[0.0], &[0.05], &times, 300, &Sequential).unwrap();
        assert!((g[0].value - (0.15f64.sin()).abs() / 0.05).abs() < 1e-12);
        assert!(g.iter().all(|e| e.within_bound()));
        let s = coupling_survival(&sim, &[0.0], &[0.05], &times, 300, &Sequential).unwrap();
        assert!(s.windows(2).all(|w| w[1].survival <= w[0].survival));
        for (a, b) in g.iter().zip(&s) {
            assert_eq!(a.survival, b.survival);
        }
        let c = estimate_gradient_modulus(&sim, &Constant(2.0), &[0.0], &[0.05], &times, 100, &Sequential).unwrap();
        assert!(c.iter().all(|e| e.value == 0.0));
    }
}
