//! One PASS/FAIL line per acceptance criterion. Run with `--nocapture` to
//! see the table; the test fails if any criterion does.

use std::time::Instant;

use levy_coupling_core::estimators::{fit_rate, ks_two_sample};
use levy_coupling_core::kernels::{CoefficientField, LevyMeasureSpec};
use levy_coupling_core::modulus_functions::{ModulusFamily, ModulusFunction};
use levy_coupling_core::quadrature::{j_nu, lambda_psi, mass_nu_u, QuadratureConfig};
use levy_coupling_core::simulator::{SimParams, Simulator};
use levy_coupling_lab::{run, Command, ExperimentConfig, Parallel, Report};

struct Outcome {
    id: u8,
    title: &'static str,
    pass: bool,
    detail: String,
    seconds: f64,
    budget: f64,
}

fn config(lines: &[(&str, &str)]) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    for (k, v) in lines {
        c.set(k, v).unwrap();
    }
    c.validate().unwrap();
    c
}

fn lab(cmd: Command, cfg: &ExperimentConfig) -> Report {
    run(cmd, cfg, &Parallel::new(0).unwrap()).unwrap()
}

fn column(r: &Report, name: &str) -> Vec<f64> {
    let t = &r.tables[0];
    let i = t.header.iter().position(|h| h == name).unwrap();
    t.rows.iter().map(|row| row[i].parse().unwrap()).collect()
}

fn timed(
    id: u8,
    title: &'static str,
    budget: f64,
    f: impl FnOnce() -> (bool, String),
) -> Outcome {
    let start = Instant::now();
    let (pass, detail) = f();
    let seconds = start.elapsed().as_secs_f64();
    Outcome {
        id,
        title,
        pass,
        detail,
        seconds,
        budget,
    }
}

fn c1_operator_identity() -> (bool, String) {
    let r = lab(Command::CheckOperatorIdentity, &config(&[("quad.tol", "1e-8"), ("check.pairs", "20")]));
    let worst = r.summary["worst_gap_over_tolerance"].as_f64().unwrap();
    (r.pass, format!("20 pairs, max gap/tol = {worst:.3e} (tol 1e-6·(1+|Lf|+|Lg|))"))
}

fn c2_mass_symmetry() -> (bool, String) {
    // The gap is compared at 1e-8, so the quadrature itself must be tighter.
    let cfg = QuadratureConfig::with_tol(1e-10);
    let cone = LevyMeasureSpec::cone(2, 1.2, 1.0, &[0.6, 0.8], 0.3).unwrap();
    let mut worst_sym: f64 = 0.0;
    for k in 0..10 {
        let theta = 0.37 + k as f64 * std::f64::consts::TAU / 10.0;
        let rad = 10f64.powf(-2.0 + 2.0 * k as f64 / 9.0);
        let u = [rad * theta.cos(), rad * theta.sin()];
        let a = mass_nu_u(&cone, &u, &cfg).unwrap().value;
        let b = mass_nu_u(&cone, &[-u[0], -u[1]], &cfg).unwrap().value;
        worst_sym = worst_sym.max(((a - b) / a).abs());
    }
    let hom = LevyMeasureSpec::homogeneous(1, 0.5, 1.0).unwrap();
    let mut worst_cf: f64 = 0.0;
    for &u in &[1e-3, 0.02, 0.3, 1.0, 7.5, -0.05] {
        let m = mass_nu_u(&hom, &[u], &cfg).unwrap().value;
        let exact = 4.0 * 2f64.sqrt() / u.abs().sqrt();
        worst_cf = worst_cf.max(((m - exact) / exact).abs());
    }
    (
        worst_sym <= 1e-8 && worst_cf <= 1e-6,
        format!("reflection rel gap {worst_sym:.2e} (≤1e-8), closed form rel err {worst_cf:.2e} (≤1e-6)"),
    )
}

fn c3_lc_closed_form() -> (bool, String) {
    let r = lab(Command::CheckLcForm, &config(&[("check.pairs", "10"), ("check.rtol", "1e-6")]));
    let worst = r.summary["worst_rel_err"].as_f64().unwrap();
    (r.pass, format!("10 configs, worst rel err {worst:.2e} (≤1e-6)"))
}

fn c4_prop32() -> (bool, String) {
    // P2 on the α = 1.5 measure; P1 needs a finite first moment, so α < 1.
    let p2 = lab(Command::CheckProp32, &config(&[("check.variant", "p2"), ("check.pairs", "20")]));
    let p1 = lab(
        Command::CheckProp32,
        &config(&[("check.variant", "p1"), ("check.pairs", "20"), ("levy.alpha", "0.7")]),
    );
    let families = |r: &Report| {
        let t = &r.tables[0];
        let i = t.header.iter().position(|h| h == "family").unwrap();
        let mut f: Vec<&str> = t.rows.iter().map(|row| row[i].as_str()).collect();
        f.sort();
        f.dedup();
        f.len()
    };
    let m2 = p2.summary["min_margin"].as_f64().unwrap();
    let m1 = p1.summary["min_margin"].as_f64().unwrap();
    (
        p2.pass && p1.pass && families(&p2) == 3 && families(&p1) == 3,
        format!("min margin p2 {m2:.4} (α=1.5), p1 {m1:.4} (α=0.7), 20 states each, ≥ -1e-6"),
    )
}

fn slope(spec: &LevyMeasureSpec, cfg: &QuadratureConfig) -> (f64, f64) {
    let pts: Vec<(f64, f64, f64)> = (0..9)
        .map(|i| {
            let r = 1e-3 * 10f64.powf(i as f64 / 4.0);
            (r, j_nu(spec, r, 16, cfg).unwrap(), 0.0)
        })
        .collect();
    let f = fit_rate(&pts, -spec.alpha(), 0.05).unwrap();
    (f.slope, f.intercept.exp())
}

fn c5_jnu_scaling() -> (bool, String) {
    let cfg = QuadratureConfig::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for &alpha in &[0.5, 1.5] {
        let specs = [
            ("hom d=1", LevyMeasureSpec::homogeneous(1, alpha, 1.0).unwrap()),
            ("hom d=2", LevyMeasureSpec::homogeneous(2, alpha, 1.0).unwrap()),
            ("cone d=1", LevyMeasureSpec::cone(1, alpha, 1.0, &[1.0], 0.5).unwrap()),
            ("cone d=2", LevyMeasureSpec::cone(2, alpha, 1.0, &[1.0, 0.0], 0.5).unwrap()),
        ];
        for (name, spec) in &specs {
            let (s, c) = slope(spec, &cfg);
            let ok = (s + alpha).abs() <= 0.05 && c > 0.0;
            pass &= ok;
            parts.push(format!("{name} α={alpha}: {s:.4}{}", if ok { "" } else { " ✗" }));
        }
    }
    (pass, parts.join(", "))
}

/// Not a criterion: the cone-stable d=1 mass in closed form, `(r^{-α} - 1)/α`,
/// shows whether a failing slope comes from the measure or from quadrature.
fn c5_diagnostic() -> String {
    let cfg = QuadratureConfig::default();
    let spec = LevyMeasureSpec::cone(1, 0.5, 1.0, &[1.0], 0.5).unwrap();
    let mut worst: f64 = 0.0;
    for &r in &[1e-3f64, 1e-2, 1e-1] {
        let exact = (r.powf(-0.5) - 1.0) / 0.5;
        worst = worst.max(((j_nu(&spec, r, 16, &cfg).unwrap() - exact) / exact).abs());
    }
    let exact_slope = {
        let pts: Vec<(f64, f64, f64)> = (0..9)
            .map(|i| {
                let r: f64 = 1e-3 * 10f64.powf(i as f64 / 4.0);
                (r, (r.powf(-0.5) - 1.0) / 0.5, 0.0)
            })
            .collect();
        fit_rate(&pts, -0.5, 0.05).unwrap().slope
    };
    format!("cone d=1 α=0.5: J_ν vs (r^-α-1)/α rel err {worst:.1e}; slope of the exact mass {exact_slope:.4}")
}

fn c6_drift() -> (bool, String) {
    let r = lab(Command::CheckDrift, &ExperimentConfig::default());
    let max = r.summary["max_margin"].as_f64().unwrap();
    let eps = r.summary["eps"].as_f64().unwrap();
    let n = r.tables[0].rows.len();
    let spec = LevyMeasureSpec::homogeneous(1, 0.5, 1.0).unwrap();
    let theta = 0.3;
    let psi = ModulusFunction::new(ModulusFamily::Power, theta, None).unwrap();
    let cfg = QuadratureConfig::default();
    let mut worst: f64 = 0.0;
    for &e in &[0.01, 0.1, 0.4] {
        let l = lambda_psi(&spec, &psi, e, 50, &cfg).unwrap();
        let exact = 4.0 * 2f64.sqrt() * theta * (1.0 - theta) * 2f64.powf(theta - 2.0) * e.powf(theta - 0.5);
        worst = worst.max(((l - exact) / exact).abs());
    }
    (
        r.pass && n == 50 && worst <= 1e-4,
        format!("max margin {max:.4} < 0 on {n} radii ≤ ε={eps}; λ_ψ(r^0.3) rel err {worst:.1e} (≤1e-4)"),
    )
}

fn c7_marginal_fidelity() -> (bool, String) {
    let spec = LevyMeasureSpec::truncated(1, 1.5, 1.0, 2.0).unwrap();
    let field = CoefficientField::sinusoidal(1, 2.0, 1.0, 1.0).unwrap();
    let cfg = QuadratureConfig::default();
    let exec = Parallel::new(0).unwrap();
    let n = 10_000u64;
    let params = |seed| SimParams {
        horizon: 1.0,
        jump_cutoff: 1e-2,
        master_seed: seed,
        ..SimParams::default()
    };
    // With a shared seed the first coupled marginal replays the single path
    // exactly, which would make the comparison vacuous.
    let single = Simulator::new(&spec, &field, params(11), &cfg).unwrap();
    let coupled = Simulator::new(&spec, &field, params(12), &cfg).unwrap();
    use levy_coupling_core::estimators::Executor;
    let a: Vec<f64> = exec.map(n, |i| single.single(&[0.0], i, &[]).unwrap().endpoint[0]);
    let b: Vec<f64> = exec.map(n, |i| coupled.coupled(&[0.0], &[0.05], i, &[]).unwrap().endpoint_x[0]);
    let d = ks_two_sample(&a, &b).unwrap();
    (d <= 0.03, format!("KS distance {d:.4} (≤0.03), n = {n} each"))
}

fn c8_rate() -> (bool, String) {
    let r = lab(Command::EstimateRate, &config(&[("sim.n", "10000")]));
    let value = column(&r, "value");
    let bound = column(&r, "bound");
    let bounded = value.iter().zip(&bound).all(|(v, b)| v <= b);
    let slope = r.summary["fit"]["slope"].as_f64().unwrap_or(f64::NAN);
    let ok_slope = (slope + 1.0 / 1.5).abs() <= 0.25;
    let trend = r.summary["trend"].as_str().unwrap_or("?").to_string();
    (
        bounded && ok_slope,
        format!("bound holds at all 5 t: {bounded}; slope {slope:.3} vs -0.667 ± 0.25; compensated trend {trend}"),
    )
}

fn c9_determinism() -> (bool, String) {
    let mut same = true;
    let cmds = [
        (Command::CheckOperatorIdentity, config(&[("check.pairs", "6")])),
        (Command::EstimateGradient, config(&[("sim.n", "600")])),
        (Command::SimulateCouple, config(&[("sim.n", "300"), ("sim.t", "0.2"), ("sim.log_events", "true")])),
    ];
    for (cmd, cfg) in &cmds {
        let bodies = |threads| {
            let r = run(*cmd, cfg, &Parallel::new(threads).unwrap()).unwrap();
            r.tables.iter().map(|t| t.to_csv().unwrap()).collect::<Vec<_>>()
        };
        let one = bodies(1);
        same &= one == bodies(4) && one == bodies(1) && one == bodies(3);
    }
    (same, "CSV bodies identical across reruns and 1/3/4 worker threads".into())
}

#[test]
fn acceptance_criteria() {
    let outcomes = vec![
        timed(1, "coupling-operator identity", 120.0, c1_operator_identity),
        timed(2, "displaced-minimum mass symmetry and closed form", 30.0, c2_mass_symmetry),
        timed(3, "coupled-jump closed form", 60.0, c3_lc_closed_form),
        timed(4, "upper-bound margins, both variants", 120.0, c4_prop32),
        timed(5, "J_ν power-law scaling", 60.0, c5_jnu_scaling),
        timed(6, "drift condition and λ_ψ closed form", 60.0, c6_drift),
        timed(7, "marginal fidelity (two-sample KS)", 300.0, c7_marginal_fidelity),
        timed(8, "coupling inequality and rate trend", 600.0, c8_rate),
        timed(9, "determinism across worker counts", 600.0, c9_determinism),
    ];
    println!();
    for o in &outcomes {
        let on_time = o.seconds <= o.budget;
        println!(
            "[{}] criterion {}: {} | {} | {:.1}s (budget {}s{})",
            if o.pass && on_time { "PASS" } else { "FAIL" },
            o.id,
            o.title,
            o.detail,
            o.seconds,
            o.budget,
            if on_time { "" } else { ", exceeded" }
        );
    }
    println!("note: {}", c5_diagnostic());
    let failed: Vec<u8> = outcomes
        .iter()
        .filter(|o| !(o.pass && o.seconds <= o.budget))
        .map(|o| o.id)
        .collect();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
