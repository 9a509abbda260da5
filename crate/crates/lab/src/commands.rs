//! Subcommand runners. Each turns a validated config into a [`Report`].

use rand::Rng;
use serde_json::{json, Value as Json};

use levy_coupling_core::estimators::{
    compensated_trend, coupling_survival, estimate_gradient_modulus, estimate_semigroup, fit_rate, Executor, Trend,
};
use levy_coupling_core::kernels::{modulus_w, modulus_w_mu, CoefficientField, LevyMeasureSpec};
use levy_coupling_core::math::{self, Point};
use levy_coupling_core::modulus_functions::{ModulusFamily, ModulusFunction};
use levy_coupling_core::quadrature::{
    apply_coupling, apply_l, apply_lc, default_c2, drift_margin, j_nu, lambda_psi, lc_closed_form, mass_nu_u,
    prop32_margin, BoundedFunction, Gaussian, HalfSpaceSign, Lorentzian, Prop32Variant, QuadratureConfig, Separated,
    Wave,
};
use levy_coupling_core::simulator::{stream_rng, Event, SimParams, Simulator};

use crate::config::ExperimentConfig;
use crate::report::{axis_names, coords, num, Report, Table};
use crate::LabError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Command {
    CheckOperatorIdentity,
    CheckLcForm,
    CheckProp32,
    CheckDrift,
    KernelMass,
    KernelJnu,
    ModulusW,
    SimulateSingle,
    SimulateCouple,
    EstimateGradient,
    EstimateSemigroup,
    EstimateSurvival,
    EstimateRate,
}

impl Command {
    pub const ALL: [Command; 13] = [
        Command::CheckOperatorIdentity,
        Command::CheckLcForm,
        Command::CheckProp32,
        Command::CheckDrift,
        Command::KernelMass,
        Command::KernelJnu,
        Command::ModulusW,
        Command::SimulateSingle,
        Command::SimulateCouple,
        Command::EstimateGradient,
        Command::EstimateSemigroup,
        Command::EstimateSurvival,
        Command::EstimateRate,
    ];

    pub fn words(self) -> &'static str {
        match self {
            Command::CheckOperatorIdentity => "check operator-identity",
            Command::CheckLcForm => "check lc-form",
            Command::CheckProp32 => "check prop32",
            Command::CheckDrift => "check drift",
            Command::KernelMass => "kernel mass",
            Command::KernelJnu => "kernel jnu",
            Command::ModulusW => "modulus w",
            Command::SimulateSingle => "simulate single",
            Command::SimulateCouple => "simulate couple",
            Command::EstimateGradient => "estimate gradient",
            Command::EstimateSemigroup => "estimate semigroup",
            Command::EstimateSurvival => "estimate survival",
            Command::EstimateRate => "estimate rate",
        }
    }

    pub fn from_words(words: &str) -> Option<Self> {
        let words = words.split_whitespace().collect::<Vec<_>>().join(" ");
        Self::ALL.into_iter().find(|c| c.words() == words)
    }

    /// Column set of `results.csv`; `d` is the state dimension.
    pub fn columns(self, d: usize) -> Vec<String> {
        let mut h: Vec<String> = Vec::new();
        let mut push = |names: &[&str]| h.extend(names.iter().map(|s| s.to_string()));
        match self {
            Command::CheckOperatorIdentity => {
                push(&["pair"]);
                h.extend(axis_names("x", d).chain(axis_names("y", d)));
                h.extend(["coupling", "lf", "lg", "gap", "tolerance", "pass"].map(String::from));
            }
            Command::CheckLcForm => {
                push(&["config", "family", "kappa", "r"]);
                h.extend(axis_names("x", d).chain(axis_names("y", d)));
                h.extend(["quadrature", "closed_form", "rel_err", "pass"].map(String::from));
            }
            Command::CheckProp32 => {
                push(&["state", "variant", "family", "r"]);
                h.extend(axis_names("x", d).chain(axis_names("y", d)));
                h.extend(["lhs", "rhs", "margin", "tolerance", "j", "pass"].map(String::from));
            }
            Command::CheckDrift => push(&["r", "margin", "pass"]),
            Command::KernelMass => {
                h.extend(axis_names("u", d));
                h.extend(["mass", "mass_reflected", "rel_gap", "error", "pass"].map(String::from));
            }
            Command::KernelJnu => push(&["r", "j_nu"]),
            Command::ModulusW => push(&["r", "w", "w_upper", "exact", "w_mu", "w_star"]),
            Command::SimulateSingle => {
                push(&["path"]);
                h.extend(axis_names("x", d));
                h.extend(["proposals", "accepted"].map(String::from));
            }
            Command::SimulateCouple => {
                push(&["path"]);
                h.extend(axis_names("x", d).chain(axis_names("y", d)));
                h.extend(["coupling_time", "proposals"].map(String::from));
            }
            Command::EstimateGradient | Command::EstimateRate => push(&["t", "value", "stderr", "bound", "survival"]),
            Command::EstimateSemigroup => push(&["t", "value", "stderr"]),
            Command::EstimateSurvival => push(&["t", "survival", "stderr", "lower", "upper"]),
        }
        h
    }
}

/// Column sets of every subcommand, for `--help`.
pub fn columns_help() -> String {
    let mut s = String::from("results.csv columns (d = 1; coordinates repeat per axis):\n");
    for c in Command::ALL {
        s.push_str(&format!("  {:<24} {}\n", c.words(), c.columns(1).join(",")));
    }
    s.push_str("  events.csv (simulate, sim.log_events = true): path,time,branch,z1,x1,y1\n");
    s
}

struct Model {
    spec: LevyMeasureSpec,
    field: CoefficientField,
    quad: QuadratureConfig,
    d: usize,
    seed: u64,
}

impl Model {
    fn new(cfg: &ExperimentConfig) -> Result<Self, LabError> {
        Ok(Model {
            spec: cfg.levy_spec()?,
            field: cfg.coefficient()?,
            quad: cfg.quadrature(),
            d: cfg.dim()?,
            seed: cfg.int("seed"),
        })
    }

    /// PRNG for sampled check state `i`.
    fn rng(&self, i: u64) -> impl Rng {
        stream_rng(self.seed, i)
    }
}

fn uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn uniform_point<R: Rng>(rng: &mut R, d: usize, half_width: f64) -> Point {
    (0..d).map(|_| uniform(rng, -half_width, half_width)).collect()
}

fn unit_vector<R: Rng>(rng: &mut R, d: usize) -> Point {
    loop {
        let v = uniform_point(rng, d, 1.0);
        let n = math::norm(&v);
        if n > 1e-3 && n <= 1.0 {
            return math::scale(&v, 1.0 / n);
        }
    }
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    math::exp(uniform(rng, math::ln(lo), math::ln(hi)))
}

/// `n` log-spaced points on `[lo, hi]`, the last one exactly `hi`.
fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (math::ln(lo), math::ln(hi));
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                math::exp(a + (b - a) * i as f64 / (n - 1) as f64)
            }
        })
        .collect()
}

/// Profiles used by the quadrature checks, one per modulus family.
const PROFILE_THETAS: [(ModulusFamily, f64); 3] = [
    (ModulusFamily::LipLog, 0.5),
    (ModulusFamily::LogWeighted, 1.0),
    (ModulusFamily::Power, 0.5),
];

fn profile(alpha: f64, i: usize) -> Result<(ModulusFamily, ModulusFunction), LabError> {
    let (family, theta) = PROFILE_THETAS[i % PROFILE_THETAS.len()];
    Ok((family, ModulusFunction::for_regime(alpha, family, theta, None)?))
}

fn collect<T>(rows: Vec<Result<T, LabError>>) -> Result<Vec<T>, LabError> {
    rows.into_iter().collect()
}

fn flag(b: bool) -> String {
    if b { "true" } else { "false" }.to_string()
}

pub fn run<E: Executor + Sync>(cmd: Command, cfg: &ExperimentConfig, exec: &E) -> Result<Report, LabError> {
    cfg.validate()?;
    let mut report = match cmd {
        Command::CheckOperatorIdentity => operator_identity(cfg, exec)?,
        Command::CheckLcForm => lc_form(cfg, exec)?,
        Command::CheckProp32 => prop32(cfg, exec)?,
        Command::CheckDrift => drift(cfg)?,
        Command::KernelMass => kernel_mass(cfg, exec)?,
        Command::KernelJnu => kernel_jnu(cfg)?,
        Command::ModulusW => modulus(cfg)?,
        Command::SimulateSingle => simulate(cfg, exec, false)?,
        Command::SimulateCouple => simulate(cfg, exec, true)?,
        Command::EstimateGradient => gradient(cfg, exec, false)?,
        Command::EstimateRate => gradient(cfg, exec, true)?,
        Command::EstimateSemigroup => semigroup(cfg, exec)?,
        Command::EstimateSurvival => survival(cfg, exec)?,
    };
    report.command = cmd.words().to_string();
    if let Json::Object(m) = &mut report.summary {
        m.insert("command".into(), json!(cmd.words()));
        m.insert("pass".into(), json!(report.pass));
    }
    if cfg.flag("out.gnuplot") {
        report.plot = Some(plot_script(cmd));
    }
    debug_assert!(report
        .tables
        .first()
        .is_some_and(|t| t.file == "results.csv" && t.header == cmd.columns(cfg.dim().unwrap_or(1))));
    Ok(report)
}

fn report(pass: bool, results: Table, summary: Json) -> Report {
    Report {
        command: String::new(),
        pass,
        tables: vec![results],
        summary,
        plot: None,
    }
}

fn plot_script(cmd: Command) -> String {
    let (logscale, using) = match cmd {
        Command::KernelJnu => ("set logscale xy\n", "1:2"),
        Command::EstimateGradient | Command::EstimateRate => ("set logscale xy\n", "1:2:3 with yerrorbars"),
        Command::CheckDrift => ("set logscale x\n", "1:2"),
        _ => ("", "1:2"),
    };
    format!(
        "set datafile separator ','\nset key autotitle columnhead\n{logscale}plot 'results.csv' using {using}\n"
    )
}

fn operator_identity<E: Executor + Sync>(cfg: &ExperimentConfig, exec: &E) -> Result<Report, LabError> {
    let m = Model::new(cfg)?;
    let rtol = cfg.float("check.rtol");
    let kappa = cfg.float("sim.kappa");
    let h = Separated {
        first: Gaussian,
        second: Lorentzian,
    };
    let rows = exec.map(cfg.int("check.pairs"), |i| -> Result<(bool, f64, Vec<String>), LabError> {
        let mut rng = m.rng(i);
        let x = uniform_point(&mut rng, m.d, 3.0);
        let y = uniform_point(&mut rng, m.d, 3.0);
        let lhs = apply_coupling(&m.spec, &m.field, &h, &x, &y, kappa, &m.quad)?;
        let lf = apply_l(&m.spec, &m.field, &Gaussian, &x, &m.quad)?;
        let lg = apply_l(&m.spec, &m.field, &Lorentzian, &y, &m.quad)?;
        let gap = (lhs.value - lf.value - lg.value).abs();
        let tol = rtol * (1.0 + lf.value.abs() + lg.value.abs());
        let pass = gap <= tol;
        let mut row = vec![i.to_string()];
        row.extend(coords(&x).chain(coords(&y)));
        row.extend([num(lhs.value), num(lf.value), num(lg.value), num(gap), num(tol), flag(pass)]);
        Ok((pass, gap / tol, row))
    });
    let rows = collect(rows)?;
    let mut t = Table::with_header("results.csv", Command::CheckOperatorIdentity.columns(m.d));
    let pass = rows.iter().all(|r| r.0);
    let worst = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    for r in rows {
        t.push(r.2);
    }
    Ok(report(pass, t, json!({ "pairs": cfg.int("check.pairs"), "worst_gap_over_tolerance": worst })))
}

const LC_KAPPAS: [f64; 5] = [0.05, 0.1, 0.25, 0.5, 1.0];

fn lc_form<E: Executor + Sync>(cfg: &ExperimentConfig, exec: &E) -> Result<Report, LabError> {
    let m = Model::new(cfg)?;
    if !m.spec.is_symmetric() {
        return Err(LabError::config(
            "levy.family",
            "the closed form of the coupled-jump part needs a symmetric Lévy measure",
        ));
    }
    let rtol = cfg.float("check.rtol");
    let alpha = m.spec.alpha();
    let rows = exec.map(cfg.int("check.pairs"), |i| -> Result<(bool, f64, Vec<String>), LabError> {
        let mut rng = m.rng(i);
        let (family, psi) = profile(alpha, i as usize)?;
        let f = psi.extended();
        let kappa = LC_KAPPAS[i as usize % LC_KAPPAS.len()];
        let x = uniform_point(&mut rng, m.d, 3.0);
        let r = log_uniform(&mut rng, 1e-2, 0.5);
        let y = math::axpy(&x, -r, &unit_vector(&mut rng, m.d));
        let q = apply_lc(&m.spec, &m.field, &f, &x, &y, kappa, &m.quad)?;
        let c = lc_closed_form(&m.spec, &m.field, &f, &x, &y, kappa, &m.quad)?;
        let rel = if c.value == q.value {
            0.0
        } else {
            ((q.value - c.value) / c.value).abs()
        };
        let pass = rel <= rtol;
        let mut row = vec![i.to_string(), family.name().to_string(), num(kappa), num(r)];
        row.extend(coords(&x).chain(coords(&y)));
        row.extend([num(q.value), num(c.value), num(rel), flag(pass)]);
        Ok((pass, rel, row))
    });
    let rows = collect(rows)?;
    let mut t = Table::with_header("results.csv", Command::CheckLcForm.columns(m.d));
    let pass = rows.iter().all(|r| r.0);
    let worst = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    for r in rows {
        t.push(r.2);
    }
    Ok(report(pass, t, json!({ "configs": cfg.int("check.pairs"), "worst_rel_err": worst, "rtol": rtol })))
}

fn prop32<E: Executor + Sync>(cfg: &ExperimentConfig, exec: &E) -> Result<Report, LabError> {
    let m = Model::new(cfg)?;
    let kappa = cfg.float("sim.kappa");
    let eps0 = cfg.float("check.eps0");
    let tol = cfg.float("check.margin_tol");
    let mut variants = Vec::new();
    let mut skipped = Json::Null;
    match cfg.text("check.variant") {
        "p2" => variants.push(Prop32Variant::P2),
        "p1" => variants.push(Prop32Variant::P1),
        _ => {
            variants.push(Prop32Variant::P2);
            if m.spec.has_first_moment() {
                variants.push(Prop32Variant::P1);
            } else {
                skipped = json!("p1: the Lévy measure has no finite first moment on the unit ball");
            }
        }
    }
    let alpha = m.spec.alpha();
    let n = cfg.int("check.pairs");
    let jobs = n * variants.len() as u64;
    let rows = exec.map(jobs, |job| -> Result<(bool, f64, Vec<String>), LabError> {
        let (i, variant) = (job % n, variants[(job / n) as usize]);
        let mut rng = m.rng(i);
        let (family, psi) = profile(alpha, i as usize)?;
        let f = psi.extended();
        let x = uniform_point(&mut rng, m.d, 3.0);
        let r = log_uniform(&mut rng, 1e-3, eps0);
        let y = math::axpy(&x, -r, &unit_vector(&mut rng, m.d));
        let pm = prop32_margin(&m.spec, &m.field, &f, &x, &y, kappa, eps0, variant, &m.quad)?;
        let pass = pm.margin >= -tol;
        let name = match variant {
            Prop32Variant::P2 => "p2",
            Prop32Variant::P1 => "p1",
        };
        let mut row = vec![i.to_string(), name.to_string(), family.name().to_string(), num(r)];
        row.extend(coords(&x).chain(coords(&y)));
        row.extend([num(pm.lhs), num(pm.rhs), num(pm.margin), num(pm.tolerance), num(pm.j), flag(pass)]);
        Ok((pass, pm.margin, row))
    });
    let rows = collect(rows)?;
    let mut t = Table::with_header("results.csv", Command::CheckProp32.columns(m.d));
    let pass = rows.iter().all(|r| r.0);
    let worst = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    for r in rows {
        t.push(r.2);
    }
    Ok(report(
        pass,
        t,
        json!({ "states": n, "min_margin": worst, "margin_tol": tol, "eps0": eps0, "kappa": kappa, "skipped": skipped }),
    ))
}

fn drift(cfg: &ExperimentConfig) -> Result<Report, LabError> {
    let m = Model::new(cfg)?;
    let psi = cfg.psi()?;
    let eps = cfg.float("drift.eps");
    if 2.0 * eps > psi.valid_radius() {
        return Err(LabError::config(
            "drift.eps",
            format!("2ε = {} exceeds the valid radius {} of ψ", 2.0 * eps, psi.valid_radius()),
        ));
    }
    let order = cfg.moment_order("drift.moment")?;
    let c1 = cfg.float("drift.c1");
    let c2 = cfg.opt_float("drift.c2").unwrap_or_else(|| default_c2(&m.spec, &m.field, &psi));
    let grid = cfg.int("drift.grid") as usize;
    let mut t = Table::with_header("results.csv", Command::CheckDrift.columns(m.d));
    let mut worst = f64::NEG_INFINITY;
    for r in log_grid(1e-4 * eps, eps, grid) {
        let margin = drift_margin(&m.spec, &m.field, &psi, r, c1, c2, order, &m.quad)?;
        worst = worst.max(margin);
        t.push(vec![num(r), num(margin), flag(margin < 0.0)]);
    }
    let lambda = lambda_psi(&m.spec, &psi, eps, grid, &m.quad)?;
    Ok(report(
        worst < 0.0,
        t,
        json!({
            "psi": psi.family().name(),
            "theta": psi.theta(),
            "eps": eps,
            "c1": c1,
            "c2": c2,
            "moment": order.exponent(),
            "max_margin": worst,
            "lambda_psi": lambda,
        }),
    ))
}

fn kernel_mass<E: Executor + Sync>(cfg: &ExperimentConfig, exec: &E) -> Result<Report, LabError> {
    let m = Model::new(cfg)?;
    let tol = cfg.float("kernel.sym_tol");
    let us: Vec<&[f64]> = cfg.list("kernel.u").chunks(m.d).collect();
    let rows = exec.map(us.len() as u64, |i| -> Result<(bool, Vec<String>), LabError> {
        let u = us[i as usize];
        let a = mass_nu_u(&m.spec, u, &m.quad)?;
        let b = mass_nu_u(&m.spec, &math::neg(u), &m.quad)?;
        let gap = if a.value == b.value {
            0.0
        } else {
            ((a.value - b.value) / a.value.abs().max(b.value.abs())).abs()
        };
        let pass = gap <= tol;
        let mut row: Vec<String> = coords(u).collect();
        row.extend([num(a.value), num(b.value), num(gap), num(a.total_error()), flag(pass)]);
        Ok((pass, row))
    });
    let rows = collect(rows)?;
    let mut t = Table::with_header("results.csv", Command::KernelMass.columns(m.d));
    let pass = rows.iter().all(|r| r.0);
    for r in rows {
        t.push(r.1);
    }
    Ok(report(pass, t, json!({ "displacements": us.len(), "sym_tol": tol })))
}

fn kernel_jnu(cfg: &ExperimentConfig) -> Result<Report, LabError> {
    let m = Model::new(cfg)?;
    let dirs = cfg.int("kernel.directions") as usize;
    let grid = log_grid(cfg.float("kernel.r_min"), cfg.float("kernel.r_max"), cfg.int("kernel.points") as usize);
    let mut t = Table::with_header("results.csv", Command::KernelJnu.columns(m.d));
    let mut points = Vec::with_capacity(grid.len());
    for r in grid {
        let j = j_nu(&m.spec, r, dirs, &m.quad)?;
        t.push(vec![num(r), num(j)]);
        points.push((r, j, 0.0));
    }
    let predicted = -m.spec.alpha();
    let tol = cfg.float("kernel.slope_tol");
    let (pass, fit) = match fit_rate(&points, predicted, tol) {
        Ok(fit) => {
            let prefactor = math::exp(fit.intercept);
            (
                fit.agrees && prefactor > 0.0,
                json!({ "slope": fit.slope, "prefactor": prefactor, "half_width": fit.half_width }),
            )
        }
        Err(e) => (false, json!({ "error": e.to_string() })),
    };
    Ok(report(pass, t, json!({ "predicted_slope": predicted, "slope_tol": tol, "fit": fit })))
}

fn modulus(cfg: &ExperimentConfig) -> Result<Report, LabError> {
    let m = Model::new(cfg)?;
    let pert = cfg.perturbation()?;
    let order = cfg.moment_order("modulus.order")?;
    let mut t = Table::with_header("results.csv", Command::ModulusW.columns(m.d));
    let mut inexact = 0;
    for &r in cfg.list("modulus.r") {
        let w = modulus_w(&m.spec, &m.field, r, order, &m.quad)?;
        let w_mu = modulus_w_mu(&pert, r, order)?;
        if !w.exact {
            inexact += 1;
        }
        t.push(vec![
            num(r),
            num(w.value),
            num(w.upper_bound),
            flag(w.exact),
            num(w_mu),
            num(w.upper_bound + w_mu),
        ]);
    }
    Ok(report(
        true,
        t,
        json!({ "moment": order.exponent(), "sampled_lower_bounds": inexact, "coeff": m.field.family().name() }),
    ))
}

fn event_rows(t: &mut Table, path: u64, events: &[Event]) {
    for e in events {
        let mut row = vec![path.to_string(), num(e.time), e.kind.code().to_string()];
        row.extend(coords(&e.z).chain(coords(&e.post_x)).chain(coords(&e.post_y)));
        t.push(row);
    }
}

fn event_table(d: usize) -> Table {
    let mut h: Vec<String> = ["path", "time", "branch"].map(String::from).to_vec();
    h.extend(axis_names("z", d).chain(axis_names("x", d)).chain(axis_names("y", d)));
    Table::with_header("events.csv", h)
}

fn simulate<E: Executor + Sync>(cfg: &ExperimentConfig, exec: &E, coupled: bool) -> Result<Report, LabError> {
    let m = Model::new(cfg)?;
    let params = cfg.sim_params();
    let sim = Simulator::new(&m.spec, &m.field, params, &m.quad)?;
    let (x0, y0) = (cfg.list("sim.x0"), cfg.list("sim.y0"));
    let n = cfg.int("sim.n");
    let cmd = if coupled {
        Command::SimulateCouple
    } else {
        Command::SimulateSingle
    };
    let mut t = Table::with_header("results.csv", cmd.columns(m.d));
    let mut events = event_table(m.d);
    let mut summary = json!({
        "paths": n,
        "horizon": params.horizon,
        "eps_sim": params.jump_cutoff,
        "proposal_rate": sim.rate(),
        "bias_proxy": sim.bias_proxy(),
    });
    if coupled {
        let paths = collect(exec.map(n, |i| sim.coupled(x0, y0, i, &[]).map_err(LabError::from)))?;
        let mut branches = [0u64; 5];
        let mut met = 0u64;
        for p in &paths {
            let mut row = vec![p.stream.to_string()];
            row.extend(coords(&p.endpoint_x).chain(coords(&p.endpoint_y)));
            row.push(p.coupling_time.map(num).unwrap_or_default());
            row.push(p.proposals.to_string());
            t.push(row);
            for (b, c) in branches.iter_mut().zip(p.branch_counts) {
                *b += c;
            }
            met += p.coupling_time.is_some() as u64;
            event_rows(&mut events, p.stream, &p.events);
        }
        summary["coupled_fraction"] = json!(met as f64 / n as f64);
        summary["branch_counts"] = json!(branches);
    } else {
        let paths = collect(exec.map(n, |i| sim.single(x0, i, &[]).map_err(LabError::from)))?;
        let (mut proposed, mut accepted) = (0u64, 0u64);
        for p in &paths {
            let mut row = vec![p.stream.to_string()];
            row.extend(coords(&p.endpoint));
            row.extend([p.proposals.to_string(), p.accepted.to_string()]);
            t.push(row);
            proposed += p.proposals;
            accepted += p.accepted;
            event_rows(&mut events, p.stream, &p.events);
        }
        summary["acceptance"] = json!(if proposed == 0 { 1.0 } else { accepted as f64 / proposed as f64 });
    }
    let mut r = report(true, t, summary);
    if params.log_events {
        r.tables.push(events);
    }
    Ok(r)
}

/// Simulator whose horizon is the last observation time.
fn estimate_sim<'a>(
    m: &'a Model,
    cfg: &ExperimentConfig,
) -> Result<(Simulator<'a>, Vec<f64>), LabError> {
    let times = cfg.list("estimate.times").to_vec();
    let params = SimParams {
        horizon: *times.last().expect("validated nonempty"),
        log_events: false,
        ..cfg.sim_params()
    };
    Ok((Simulator::new(&m.spec, &m.field, params, &m.quad)?, times))
}

fn test_function(cfg: &ExperimentConfig, d: usize) -> Box<dyn BoundedFunction + Sync> {
    let e1 = math::unit(d, 0);
    match cfg.text("estimate.f") {
        "sign" => {
            let mid = 0.5 * (cfg.list("sim.x0")[0] + cfg.list("sim.y0")[0]);
            Box::new(HalfSpaceSign { normal: e1, offset: mid })
        }
        "cosine" => Box::new(Wave::cosine(&e1)),
        _ => Box::new(Gaussian),
    }
}

fn gradient<E: Executor + Sync>(cfg: &ExperimentConfig, exec: &E, fit: bool) -> Result<Report, LabError> {
    let m = Model::new(cfg)?;
    let (sim, times) = estimate_sim(&m, cfg)?;
    let f = test_function(cfg, m.d);
    let (x0, y0) = (cfg.list("sim.x0"), cfg.list("sim.y0"));
    let n = cfg.int("sim.n") as usize;
    let est = estimate_gradient_modulus(&sim, &*f, x0, y0, &times, n, exec)?;
    let cmd = if fit {
        Command::EstimateRate
    } else {
        Command::EstimateGradient
    };
    let mut t = Table::with_header("results.csv", cmd.columns(m.d));
    for e in &est {
        t.push(vec![num(e.t), num(e.value), num(e.stderr), num(e.bound), num(e.survival)]);
    }
    let bounded = est.iter().all(|e| e.within_bound());
    let mut summary = json!({
        "paths": n,
        "distance": math::norm(&math::sub(x0, y0)),
        "test_function": cfg.text("estimate.f"),
        "within_bound": bounded,
    });
    let mut pass = bounded;
    if fit {
        let alpha1 = cfg.opt_float("estimate.alpha1").unwrap_or_else(|| m.spec.alpha());
        let predicted = -1.0 / alpha1;
        let tol = cfg.float("estimate.slope_tol");
        let points: Vec<(f64, f64, f64)> = est.iter().map(|e| (e.t, e.value, e.stderr)).collect();
        let trend = compensated_trend(&points.iter().map(|p| (p.0, p.1)).collect::<Vec<_>>(), predicted);
        summary["trend"] = json!(trend_name(trend));
        match fit_rate(&points, predicted, tol) {
            Ok(r) => {
                pass &= r.agrees;
                summary["fit"] = json!({
                    "slope": r.slope,
                    "intercept": r.intercept,
                    "half_width": r.half_width,
                    "predicted": r.predicted,
                    "tolerance": r.tolerance,
                    "points_used": r.points.len(),
                    "agrees": r.agrees,
                });
            }
            Err(e) => {
                pass = false;
                summary["fit"] = json!({ "error": e.to_string() });
            }
        }
    }
    Ok(report(pass, t, summary))
}

fn trend_name(t: Trend) -> &'static str {
    match t {
        Trend::Increasing => "increasing",
        Trend::Decreasing => "decreasing",
        Trend::Flat => "flat",
        Trend::Mixed => "mixed",
    }
}

fn semigroup<E: Executor + Sync>(cfg: &ExperimentConfig, exec: &E) -> Result<Report, LabError> {
    let m = Model::new(cfg)?;
    let (sim, times) = estimate_sim(&m, cfg)?;
    let f = test_function(cfg, m.d);
    let n = cfg.int("sim.n") as usize;
    let est = estimate_semigroup(&sim, &*f, cfg.list("sim.x0"), &times, n, exec)?;
    let mut t = Table::with_header("results.csv", Command::EstimateSemigroup.columns(m.d));
    for e in &est {
        t.push(vec![num(e.t), num(e.value), num(e.stderr)]);
    }
    let sup = f.sup_norm();
    let pass = est.iter().all(|e| e.value.abs() <= sup);
    Ok(report(pass, t, json!({ "paths": n, "sup_norm": sup, "test_function": cfg.text("estimate.f") })))
}

fn survival<E: Executor + Sync>(cfg: &ExperimentConfig, exec: &E) -> Result<Report, LabError> {
    let m = Model::new(cfg)?;
    let (sim, times) = estimate_sim(&m, cfg)?;
    let n = cfg.int("sim.n") as usize;
    let curve = coupling_survival(&sim, cfg.list("sim.x0"), cfg.list("sim.y0"), &times, n, exec)?;
    let mut t = Table::with_header("results.csv", Command::EstimateSurvival.columns(m.d));
    for p in &curve {
        t.push(vec![num(p.t), num(p.survival), num(p.stderr), num(p.lower), num(p.upper)]);
    }
    let pass = curve.windows(2).all(|w| w[1].survival <= w[0].survival)
        && curve.iter().all(|p| (0.0..=1.0).contains(&p.survival));
    let half = curve.iter().find(|p| p.survival < 0.5).map(|p| p.t);
    Ok(report(pass, t, json!({ "paths": n, "first_t_below_half": half })))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn words_round_trip() {
        for c in Command::ALL {
            assert_eq!(Command::from_words(c.words()), Some(c));
        }
        assert_eq!(Command::from_words("check  drift"), Some(Command::CheckDrift));
        assert_eq!(Command::from_words("check nothing"), None);
    }

    #[test]
    fn log_grid_ends_exactly() {
        let g = log_grid(1e-8, 1e-4, 50);
        assert_eq!(g.len(), 50);
        assert_eq!(g[49], 1e-4);
        assert!((g[0] - 1e-8).abs() < 1e-20);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn momentless_order_is_rejected_by_modulus() {
        let mut cfg = ExperimentConfig::default();
        cfg.set("modulus.order", "1").unwrap();
        assert!(run(Command::ModulusW, &cfg, &levy_coupling_core::estimators::Sequential).is_err());
    }
}
