use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use levy_coupling_lab::config::{key_def, OUT_DIR_ENV};
use levy_coupling_lab::report::read_manifest;
use levy_coupling_lab::{commands, emit, run, Command, ExperimentConfig, LabError, Parallel};

#[derive(Parser)]
#[command(
    name = "levy-coupling-lab",
    version,
    about = "Quadrature checks, coupled jump simulation and coupling-rate estimates",
    after_long_help = help_footer()
)]
struct Cli {
    #[command(subcommand)]
    group: Group,
}

#[derive(Subcommand)]
enum Group {
    /// Quadrature checks of the coupling operator and drift condition
    #[command(subcommand)]
    Check(CheckCmd),
    /// Kernel masses and J_ν
    #[command(subcommand)]
    Kernel(KernelCmd),
    /// Coefficient moduli
    #[command(subcommand)]
    Modulus(ModulusCmd),
    /// Trajectories of the single or coupled process
    #[command(subcommand)]
    Simulate(SimulateCmd),
    /// Monte Carlo estimates over coupled trajectories
    #[command(subcommand)]
    Estimate(EstimateCmd),
    /// Re-run the command and config recorded in a manifest.json
    Rerun {
        manifest: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
}

#[derive(Subcommand)]
enum CheckCmd {
    /// L̃(f ⊕ g) = Lf + Lg on sampled pairs
    OperatorIdentity(Opts),
    /// Coupled-jump part against its closed form
    LcForm(Opts),
    /// Margins of the upper bound for L̃ f(|x-y|)
    Prop32(Opts),
    /// Drift margin on a log grid and λ_ψ
    Drift(Opts),
}

#[derive(Subcommand)]
enum KernelCmd {
    /// Displaced-minimum masses and their reflection symmetry
    Mass(Opts),
    /// J_ν(r) on a log grid with a power-law fit
    Jnu(Opts),
}

#[derive(Subcommand)]
enum ModulusCmd {
    /// w(r), w_μ(r) and w_*(r)
    W(Opts),
}

#[derive(Subcommand)]
enum SimulateCmd {
    Single(Opts),
    Couple(Opts),
}

#[derive(Subcommand)]
enum EstimateCmd {
    /// Coupled gradient modulus against the coupling bound
    Gradient(Opts),
    /// P_t f(x0)
    Semigroup(Opts),
    /// Coupling-time survival curve
    Survival(Opts),
    /// Gradient modulus plus a log-log rate fit
    Rate(Opts),
}

#[derive(Args, Default)]
struct Opts {
    /// Flat `key = value` config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads (0 = all cores); never changes results
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Output directory (overrides out.dir)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Config overrides as `--key value`, e.g. `--levy.alpha 1.2 --x0 0`
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
    overrides: Vec<String>,
}

const ALIASES: &[(&str, &str)] = &[
    ("x0", "sim.x0"),
    ("y0", "sim.y0"),
    ("t", "sim.t"),
    ("eps-sim", "sim.eps_sim"),
    ("dt", "sim.dt"),
    ("kappa", "sim.kappa"),
    ("n", "sim.n"),
    ("log-events", "sim.log_events"),
    ("psi", "psi.family"),
    ("theta", "psi.theta"),
];

fn help_footer() -> String {
    let mut s = String::from("Config keys (any may be given as `--key value`):\n");
    for k in levy_coupling_lab::config::KEYS {
        s.push_str(&format!("  {:<20} [{}] {}\n", k.name, k.default, k.help));
    }
    s.push_str("\nShort flags: ");
    s.push_str(&ALIASES.iter().map(|(a, k)| format!("--{a} = {k}")).collect::<Vec<_>>().join(", "));
    s.push_str(&format!(
        "\n\n{}\nOutput goes to <out.dir>/<command>/ (default ${OUT_DIR_ENV} or ./lab-out).\n\
         Exit status: 0 pass, 1 verdict failure, 2 usage or config error, 3 numeric budget exhausted.\n",
        commands::columns_help()
    ));
    s
}

/// Applies `--key value` pairs; `--config`, `--threads` and `--out` are also
/// accepted here because clap hands over everything after the first unknown
/// flag.
fn apply_overrides(
    cfg: &mut ExperimentConfig,
    opts: &mut Opts,
    tokens: &[String],
) -> Result<(), LabError> {
    let mut i = 0;
    while i < tokens.len() {
        let tok = &tokens[i];
        let name = tok
            .strip_prefix("--")
            .ok_or_else(|| LabError::Usage(format!("expected `--key value`, got `{tok}`")))?;
        let (name, inline) = match name.split_once('=') {
            Some((n, v)) => (n, Some(v.to_string())),
            None => (name, None),
        };
        let key = ALIASES.iter().find(|a| a.0 == name).map_or(name, |a| a.1);
        let is_flag = key == "sim.log_events";
        let value = match inline {
            Some(v) => v,
            None if is_flag && tokens.get(i + 1).map_or(true, |n| n.starts_with("--")) => "true".into(),
            None => {
                i += 1;
                tokens
                    .get(i)
                    .cloned()
                    .ok_or_else(|| LabError::Usage(format!("`--{name}` needs a value")))?
            }
        };
        match key {
            "config" => return Err(LabError::Usage("`--config` must come before overrides".into())),
            "threads" => {
                opts.threads = value
                    .parse()
                    .map_err(|_| LabError::Usage(format!("`--threads` expects an integer, got `{value}`")))?
            }
            "out" => cfg.set("out.dir", &value)?,
            _ if key_def(key).is_none() => return Err(LabError::UnknownKey(name.to_string())),
            _ => cfg.set(key, &value)?,
        }
        i += 1;
    }
    Ok(())
}

fn execute(cmd: Command, base: Option<String>, mut opts: Opts) -> Result<bool, LabError> {
    let text = match (&opts.config, base) {
        (Some(path), _) => std::fs::read_to_string(path)
            .map_err(|e| LabError::Usage(format!("cannot read {}: {e}", path.display())))?,
        (None, Some(text)) => text,
        (None, None) => String::new(),
    };
    let mut cfg = ExperimentConfig::parse(&text)?;
    let tokens = std::mem::take(&mut opts.overrides);
    apply_overrides(&mut cfg, &mut opts, &tokens)?;
    if let Some(out) = &opts.out {
        cfg.set("out.dir", &out.to_string_lossy())?;
    }
    cfg.set("experiment", cmd.words())?;
    cfg.validate()?;
    let exec = Parallel::new(opts.threads)?;
    let report = run(cmd, &cfg, &exec)?;
    let dir = emit(&report, &cfg, &cfg.out_dir())?;
    println!(
        "{}: {} ({})",
        cmd.words(),
        if report.pass { "pass" } else { "FAIL" },
        dir.display()
    );
    Ok(report.pass)
}

fn dispatch(group: Group) -> Result<bool, LabError> {
    use Command as C;
    let (cmd, opts, base) = match group {
        Group::Check(c) => match c {
            CheckCmd::OperatorIdentity(o) => (C::CheckOperatorIdentity, o, None),
            CheckCmd::LcForm(o) => (C::CheckLcForm, o, None),
            CheckCmd::Prop32(o) => (C::CheckProp32, o, None),
            CheckCmd::Drift(o) => (C::CheckDrift, o, None),
        },
        Group::Kernel(KernelCmd::Mass(o)) => (C::KernelMass, o, None),
        Group::Kernel(KernelCmd::Jnu(o)) => (C::KernelJnu, o, None),
        Group::Modulus(ModulusCmd::W(o)) => (C::ModulusW, o, None),
        Group::Simulate(SimulateCmd::Single(o)) => (C::SimulateSingle, o, None),
        Group::Simulate(SimulateCmd::Couple(o)) => (C::SimulateCouple, o, None),
        Group::Estimate(e) => match e {
            EstimateCmd::Gradient(o) => (C::EstimateGradient, o, None),
            EstimateCmd::Semigroup(o) => (C::EstimateSemigroup, o, None),
            EstimateCmd::Survival(o) => (C::EstimateSurvival, o, None),
            EstimateCmd::Rate(o) => (C::EstimateRate, o, None),
        },
        Group::Rerun { manifest, opts } => {
            let (words, config) = read_manifest(&manifest)?;
            let cmd = Command::from_words(&words)
                .ok_or_else(|| LabError::Usage(format!("manifest names unknown command `{words}`")))?;
            (cmd, opts, Some(config))
        }
    };
    execute(cmd, base, opts)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli.group) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
