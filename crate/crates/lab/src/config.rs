//! Flat `key = value` experiment configuration.
//!
//! Every key has a default; a parsed config records for each key whether the
//! value was defaulted or given explicitly. [`ExperimentConfig::serialize`]
//! writes every key, so the output reparses to an equal config.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use levy_coupling_core::kernels::{
    CoefficientFamily, CoefficientField, Cone, LevyFamily, LevyMeasureSpec, MomentOrder, PerturbationKernel,
};
use levy_coupling_core::modulus_functions::{ModulusFamily, ModulusFunction};
use levy_coupling_core::quadrature::QuadratureConfig;
use levy_coupling_core::simulator::SimParams;

use crate::LabError;

/// Environment variable that sets the default of `out.dir`.
pub const OUT_DIR_ENV: &str = "LEVY_LAB_OUT";
const OUT_DIR_FALLBACK: &str = "lab-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Float,
    /// A float or `auto`.
    OptFloat,
    Int,
    /// Comma-separated floats.
    List,
    /// A list or `auto`.
    OptList,
    Bool,
    Choice(&'static [&'static str]),
    Text,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Float(f64),
    Int(u64),
    List(Vec<f64>),
    Bool(bool),
    Text(String),
    Auto,
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Float(v) => write!(f, "{v}"),
            Value::Int(v) => write!(f, "{v}"),
            Value::List(v) => {
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{x}")?;
                }
                Ok(())
            }
            Value::Bool(v) => write!(f, "{v}"),
            Value::Text(v) => f.write_str(v),
            Value::Auto => f.write_str("auto"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Default,
    Explicit,
}

impl Provenance {
    pub fn name(self) -> &'static str {
        match self {
            Provenance::Default => "default",
            Provenance::Explicit => "explicit",
        }
    }
}

pub struct KeyDef {
    pub name: &'static str,
    pub kind: Kind,
    pub default: &'static str,
    pub help: &'static str,
}

const LEVY_FAMILIES: &[&str] = &["homogeneous", "truncated", "cone"];
const COEFF_FAMILIES: &[&str] = &["constant", "separable-sinusoidal", "separable-holder", "user-table"];
const PERT_FAMILIES: &[&str] = &["none", "cosine-stable"];
const PSI_FAMILIES: &[&str] = &["lip-log", "log-weighted", "power"];
const VARIANTS: &[&str] = &["p2", "p1", "both"];
const TEST_FUNCTIONS: &[&str] = &["sign", "cosine", "gaussian"];

macro_rules! key {
    ($name:expr, $kind:expr, $default:expr, $help:expr) => {
        KeyDef {
            name: $name,
            kind: $kind,
            default: $default,
            help: $help,
        }
    };
}

/// All recognised keys, in serialization order.
pub const KEYS: &[KeyDef] = &[
    key!("experiment", Kind::Text, "", "subcommand that produced the run (set by the CLI)"),
    key!("seed", Kind::Int, "0", "master seed of all PRNG streams"),
    key!("dimension", Kind::Int, "1", "state dimension d"),
    key!("levy.family", Kind::Choice(LEVY_FAMILIES), "truncated", "Lévy measure family"),
    key!("levy.alpha", Kind::Float, "1.5", "stability index in (0, 2)"),
    key!("levy.amplitude", Kind::Float, "1", "density prefactor A"),
    key!("levy.truncation", Kind::Float, "2", "truncation radius R (truncated family)"),
    key!("levy.cone.xi", Kind::OptList, "auto", "cone axis; auto = first coordinate axis"),
    key!("levy.cone.delta", Kind::Float, "0.5", "cone aperture δ in (0, 1)"),
    key!("coeff.family", Kind::Choice(COEFF_FAMILIES), "separable-sinusoidal", "jump coefficient family"),
    key!("coeff.params", Kind::List, "2, 1, 1", "family parameters"),
    key!("coeff.clower", Kind::OptFloat, "auto", "declared lower bound c_*"),
    key!("coeff.cupper", Kind::OptFloat, "auto", "declared upper bound c^*"),
    key!("pert.family", Kind::Choice(PERT_FAMILIES), "none", "perturbation kernel family"),
    key!("pert.a", Kind::Float, "1", "x-factor offset a"),
    key!("pert.b", Kind::Float, "0", "x-factor amplitude b"),
    key!("pert.k", Kind::Float, "1", "x-factor frequency k"),
    key!("pert.beta", Kind::Float, "0.5", "perturbation index β"),
    key!("pert.amplitude", Kind::Float, "1", "perturbation prefactor"),
    key!("pert.truncation", Kind::Float, "1", "perturbation truncation radius"),
    key!("quad.tol", Kind::Float, "1e-8", "relative quadrature tolerance"),
    key!("quad.eps", Kind::OptFloat, "auto", "dropped inner ball radius"),
    key!("quad.max_subdiv", Kind::Int, "20000", "subdivision budget"),
    key!("quad.radius_cap", Kind::Float, "1e8", "outer radius for untruncated measures"),
    key!("sim.eps_sim", Kind::Float, "0.01", "jump cutoff ε_sim"),
    key!("sim.dt", Kind::Float, "0.01", "Euler step of state-dependent drift"),
    key!("sim.t", Kind::Float, "1", "horizon of simulate runs"),
    key!("sim.kappa", Kind::Float, "1", "coupling threshold κ"),
    key!("sim.n", Kind::Int, "10000", "number of trajectories"),
    key!("sim.x0", Kind::List, "0", "start of the first component"),
    key!("sim.y0", Kind::List, "0.05", "start of the second component"),
    key!("sim.log_events", Kind::Bool, "false", "write every event to events.csv"),
    key!("sim.max_events", Kind::Float, "5e7", "budget on expected proposals Λ·t"),
    key!("psi.family", Kind::Choice(PSI_FAMILIES), "lip-log", "modulus function family"),
    key!("psi.theta", Kind::Float, "0.5", "modulus exponent θ"),
    key!("psi.radius", Kind::OptFloat, "auto", "valid radius of ψ"),
    key!("drift.c1", Kind::Float, "1", "constant in front of the coefficient modulus"),
    key!("drift.c2", Kind::OptFloat, "auto", "additive constant; auto = 2 ν(|z|>1) c^* ‖ψ‖_∞"),
    key!("drift.eps", Kind::Float, "1e-4", "largest radius ε of the drift grid"),
    key!("drift.grid", Kind::Int, "50", "points of the log grid on [1e-4 ε, ε]"),
    key!("drift.moment", Kind::Int, "2", "moment order of the coefficient modulus (1 or 2)"),
    key!("check.pairs", Kind::Int, "20", "sampled states per quadrature check"),
    key!("check.rtol", Kind::Float, "1e-6", "relative tolerance of identity checks"),
    key!("check.margin_tol", Kind::Float, "1e-6", "allowed negative margin"),
    key!("check.eps0", Kind::Float, "0.5", "largest |x-y| sampled by check prop32"),
    key!("check.variant", Kind::Choice(VARIANTS), "both", "remainder variant of check prop32"),
    key!("kernel.u", Kind::List, "0.1, -0.1, 0.5", "displacements for kernel mass, d values each"),
    key!("kernel.sym_tol", Kind::Float, "1e-8", "relative tolerance of the reflection symmetry"),
    key!("kernel.r_min", Kind::Float, "1e-3", "smallest radius of kernel jnu"),
    key!("kernel.r_max", Kind::Float, "0.1", "largest radius of kernel jnu"),
    key!("kernel.points", Kind::Int, "9", "log-spaced radii of kernel jnu"),
    key!("kernel.directions", Kind::Int, "16", "direction grid of J_ν"),
    key!("kernel.slope_tol", Kind::Float, "0.05", "allowed deviation of the J_ν slope from -α"),
    key!("modulus.r", Kind::List, "0.01, 0.05, 0.1", "radii for modulus w"),
    key!("modulus.order", Kind::Int, "2", "moment order (1 or 2)"),
    key!("estimate.f", Kind::Choice(TEST_FUNCTIONS), "sign", "bounded test function"),
    key!("estimate.times", Kind::List, "0.05, 0.1, 0.2, 0.4, 0.8", "observation times"),
    key!("estimate.alpha1", Kind::OptFloat, "auto", "lower index α₁ of the predicted rate; auto = levy.alpha"),
    key!("estimate.slope_tol", Kind::Float, "0.25", "allowed deviation of the fitted slope"),
    key!("out.dir", Kind::Text, "", "output directory; empty = $LEVY_LAB_OUT or ./lab-out"),
    key!("out.gnuplot", Kind::Bool, "false", "also write a gnuplot script"),
];

pub fn key_def(name: &str) -> Option<&'static KeyDef> {
    KEYS.iter().find(|k| k.name == name)
}

fn parse_value(def: &KeyDef, raw: &str) -> Result<Value, LabError> {
    let raw = raw.trim();
    let bad = |what: &str| LabError::config(def.name, format!("expected {what}, got `{raw}`"));
    let float = |s: &str| -> Result<f64, LabError> {
        match s.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(bad("a finite number")),
        }
    };
    let list = |s: &str| -> Result<Vec<f64>, LabError> {
        if s.is_empty() {
            return Err(bad("a comma-separated list of numbers"));
        }
        s.split(',').map(float).collect()
    };
    match def.kind {
        Kind::Float => float(raw).map(Value::Float),
        Kind::OptFloat if raw == "auto" => Ok(Value::Auto),
        Kind::OptFloat => float(raw).map(Value::Float),
        Kind::Int => raw.parse::<u64>().map(Value::Int).map_err(|_| bad("a nonnegative integer")),
        Kind::List => list(raw).map(Value::List),
        Kind::OptList if raw == "auto" => Ok(Value::Auto),
        Kind::OptList => list(raw).map(Value::List),
        Kind::Bool => match raw {
            "true" => Ok(Value::Bool(true)),
            "false" => Ok(Value::Bool(false)),
            _ => Err(bad("true or false")),
        },
        Kind::Choice(options) => {
            if options.contains(&raw) {
                Ok(Value::Text(raw.to_string()))
            } else {
                Err(bad(&format!("one of {}", options.join(", "))))
            }
        }
        Kind::Text => Ok(Value::Text(raw.to_string())),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    values: BTreeMap<&'static str, (Value, Provenance)>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let values = KEYS
            .iter()
            .map(|k| {
                let v = parse_value(k, k.default).expect("key defaults parse");
                (k.name, (v, Provenance::Default))
            })
            .collect();
        ExperimentConfig { values }
    }
}

impl ExperimentConfig {
    /// Parses `key = value` lines (`#` starts a comment) and validates the
    /// result. Later lines override earlier ones.
    pub fn parse(text: &str) -> Result<Self, LabError> {
        let cfg = Self::parse_unvalidated(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn parse_unvalidated(text: &str) -> Result<Self, LabError> {
        let mut cfg = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| LabError::Usage(format!("line {}: expected `key = value`, got `{line}`", i + 1)))?;
            cfg.set(key.trim(), value)?;
        }
        Ok(cfg)
    }

    /// Sets one key explicitly. Does not re-run cross-key validation.
    pub fn set(&mut self, key: &str, raw: &str) -> Result<(), LabError> {
        let def = key_def(key).ok_or_else(|| LabError::UnknownKey(key.to_string()))?;
        let v = parse_value(def, raw)?;
        self.values.insert(def.name, (v, Provenance::Explicit));
        Ok(())
    }

    pub fn get(&self, key: &str) -> &Value {
        &self.values.get(key).unwrap_or_else(|| panic!("unregistered key {key}")).0
    }

    pub fn provenance(&self, key: &str) -> Provenance {
        self.values[key].1
    }

    /// Keys set explicitly, in serialization order.
    pub fn explicit_keys(&self) -> Vec<&'static str> {
        KEYS.iter()
            .map(|k| k.name)
            .filter(|k| self.values[k].1 == Provenance::Explicit)
            .collect()
    }

    pub fn float(&self, key: &str) -> f64 {
        match self.get(key) {
            Value::Float(v) => *v,
            other => panic!("{key} is not a float: {other:?}"),
        }
    }

    pub fn opt_float(&self, key: &str) -> Option<f64> {
        match self.get(key) {
            Value::Float(v) => Some(*v),
            Value::Auto => None,
            other => panic!("{key} is not an optional float: {other:?}"),
        }
    }

    pub fn int(&self, key: &str) -> u64 {
        match self.get(key) {
            Value::Int(v) => *v,
            other => panic!("{key} is not an integer: {other:?}"),
        }
    }

    pub fn list(&self, key: &str) -> &[f64] {
        match self.get(key) {
            Value::List(v) => v,
            other => panic!("{key} is not a list: {other:?}"),
        }
    }

    pub fn opt_list(&self, key: &str) -> Option<&[f64]> {
        match self.get(key) {
            Value::List(v) => Some(v),
            Value::Auto => None,
            other => panic!("{key} is not an optional list: {other:?}"),
        }
    }

    pub fn flag(&self, key: &str) -> bool {
        match self.get(key) {
            Value::Bool(v) => *v,
            other => panic!("{key} is not a bool: {other:?}"),
        }
    }

    pub fn text(&self, key: &str) -> &str {
        match self.get(key) {
            Value::Text(v) => v,
            other => panic!("{key} is not text: {other:?}"),
        }
    }

    /// Every key, one `key = value` line each. Defaulted keys are written
    /// commented out, so reparsing restores provenance as well as values.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for k in KEYS {
            let (v, p) = &self.values[k.name];
            if *p == Provenance::Default {
                out.push_str("# ");
            }
            let _ = writeln!(out, "{} = {v}", k.name);
        }
        out
    }

    /// Output directory: `out.dir`, else the environment, else `./lab-out`.
    pub fn out_dir(&self) -> std::path::PathBuf {
        let explicit = self.text("out.dir");
        if !explicit.is_empty() {
            return explicit.into();
        }
        match std::env::var(OUT_DIR_ENV) {
            Ok(v) if !v.is_empty() => v.into(),
            _ => OUT_DIR_FALLBACK.into(),
        }
    }

    /// Builds every model object once so that constraint errors surface at
    /// parse time, each naming its key.
    pub fn validate(&self) -> Result<(), LabError> {
        let d = self.dim()?;
        self.levy_spec()?;
        self.coefficient()?;
        self.perturbation()?;
        self.quadrature().validate()?;
        self.sim_params().validate()?;
        self.psi()?;
        self.moment_order("drift.moment")?;
        self.moment_order("modulus.order")?;
        for key in ["sim.x0", "sim.y0"] {
            if self.list(key).len() != d {
                return Err(LabError::config(key, format!("needs {d} coordinates")));
            }
        }
        if self.list("kernel.u").len() % d != 0 {
            return Err(LabError::config("kernel.u", format!("length must be a multiple of {d}")));
        }
        positive(self, "drift.eps")?;
        positive(self, "check.rtol")?;
        positive(self, "check.eps0")?;
        positive(self, "kernel.sym_tol")?;
        positive(self, "kernel.slope_tol")?;
        positive(self, "estimate.slope_tol")?;
        if self.float("check.margin_tol") < 0.0 {
            return Err(LabError::config("check.margin_tol", "must be nonnegative"));
        }
        if self.float("drift.c1") < 0.0 {
            return Err(LabError::config("drift.c1", "must be nonnegative"));
        }
        if matches!(self.opt_float("drift.c2"), Some(c) if c < 0.0) {
            return Err(LabError::config("drift.c2", "must be nonnegative"));
        }
        if !(self.float("kernel.r_min") > 0.0 && self.float("kernel.r_max") > self.float("kernel.r_min")) {
            return Err(LabError::config("kernel.r_max", "need 0 < kernel.r_min < kernel.r_max"));
        }
        for key in ["drift.grid", "kernel.points"] {
            if self.int(key) < 2 {
                return Err(LabError::config(key, "needs at least 2 points"));
            }
        }
        for key in ["check.pairs", "kernel.directions", "sim.n"] {
            if self.int(key) == 0 {
                return Err(LabError::config(key, "must be positive"));
            }
        }
        if self.list("modulus.r").iter().any(|&r| !(r > 0.0)) {
            return Err(LabError::config("modulus.r", "radii must be positive"));
        }
        let times = self.list("estimate.times");
        if times.iter().any(|&t| !(t > 0.0)) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LabError::config("estimate.times", "must be positive and strictly increasing"));
        }
        if let Some(a) = self.opt_float("estimate.alpha1") {
            if !(a > 0.0 && a < 2.0) {
                return Err(LabError::config("estimate.alpha1", format!("{a} not in (0, 2)")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> Result<usize, LabError> {
        match self.int("dimension") {
            0 => Err(LabError::config("dimension", "must be positive")),
            d => Ok(d as usize),
        }
    }

    pub fn levy_spec(&self) -> Result<LevyMeasureSpec, LabError> {
        let d = self.dim()?;
        let family = match self.text("levy.family") {
            "homogeneous" => LevyFamily::HomogeneousStable,
            "truncated" => LevyFamily::TruncatedStable,
            _ => LevyFamily::ConeStable,
        };
        let cone = if family == LevyFamily::ConeStable {
            let axis: Vec<f64> = match self.opt_list("levy.cone.xi") {
                Some(a) => a.to_vec(),
                None => (0..d).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect(),
            };
            Some(Cone::new(&axis, self.float("levy.cone.delta"))?)
        } else {
            None
        };
        Ok(LevyMeasureSpec::new(
            d,
            family,
            self.float("levy.alpha"),
            self.float("levy.amplitude"),
            self.float("levy.truncation"),
            cone,
        )?)
    }

    pub fn coefficient(&self) -> Result<CoefficientField, LabError> {
        let family = CoefficientFamily::from_name(self.text("coeff.family")).expect("validated choice");
        Ok(CoefficientField::new(
            self.dim()?,
            family,
            self.list("coeff.params"),
            self.opt_float("coeff.clower"),
            self.opt_float("coeff.cupper"),
        )?)
    }

    pub fn perturbation(&self) -> Result<PerturbationKernel, LabError> {
        let d = self.dim()?;
        match self.text("pert.family") {
            "none" => Ok(PerturbationKernel::none(d)),
            _ => Ok(PerturbationKernel::cosine_stable(
                d,
                self.float("pert.a"),
                self.float("pert.b"),
                self.float("pert.k"),
                self.float("pert.beta"),
                self.float("pert.amplitude"),
                self.float("pert.truncation"),
            )?),
        }
    }

    pub fn quadrature(&self) -> QuadratureConfig {
        QuadratureConfig {
            tol: self.float("quad.tol"),
            inner_cutoff: self.opt_float("quad.eps"),
            max_subdivisions: self.int("quad.max_subdiv") as usize,
            radius_cap: self.float("quad.radius_cap"),
        }
    }

    pub fn sim_params(&self) -> SimParams {
        SimParams {
            jump_cutoff: self.float("sim.eps_sim"),
            drift_step: self.float("sim.dt"),
            horizon: self.float("sim.t"),
            kappa: self.float("sim.kappa"),
            master_seed: self.int("seed"),
            max_expected_events: self.float("sim.max_events"),
            log_events: self.flag("sim.log_events"),
        }
    }

    pub fn psi(&self) -> Result<ModulusFunction, LabError> {
        let family = ModulusFamily::from_name(self.text("psi.family")).expect("validated choice");
        Ok(ModulusFunction::for_regime(
            self.float("levy.alpha"),
            family,
            self.float("psi.theta"),
            self.opt_float("psi.radius"),
        )?)
    }

    pub fn moment_order(&self, key: &'static str) -> Result<MomentOrder, LabError> {
        let p = self.int(key);
        u8::try_from(p)
            .ok()
            .and_then(|p| MomentOrder::from_exponent(p).ok())
            .ok_or_else(|| LabError::config(key, format!("moment order must be 1 or 2, got {p}")))
    }
}

fn positive(cfg: &ExperimentConfig, key: &'static str) -> Result<(), LabError> {
    if cfg.float(key) > 0.0 {
        Ok(())
    } else {
        Err(LabError::config(key, "must be positive"))
    }
}
