use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn lab(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_levy-coupling-lab"))
        .args(args)
        .env("LEVY_LAB_OUT", out)
        .output()
        .expect("spawn lab binary")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit status")
}

#[test]
fn operator_identity_passes_with_a_manifest() {
    let tmp = TempDir::new().unwrap();
    let o = lab(tmp.path(), &["check", "operator-identity"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let dir = tmp.path().join("check-operator-identity");
    let csv = fs::read(dir.join("results.csv")).unwrap();
    let text = String::from_utf8(csv.clone()).unwrap();
    assert!(text.starts_with("pair,x1,y1,coupling,lf,lg,gap,tolerance,pass\n"));
    assert_eq!(text.lines().count(), 21);
    let m: Value = serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "check operator-identity");
    assert_eq!(m["verdict"], "pass");
    let digest = format!("{:x}", <sha2::Sha256 as sha2::Digest>::digest(&csv));
    assert_eq!(m["files"]["results.csv"], digest.as_str());
    assert_eq!(m["config"], fs::read_to_string(dir.join("config.cfg")).unwrap().as_str());
}

#[test]
fn usage_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&lab(tmp.path(), &["frobnicate"])), 2);
    let o = lab(tmp.path(), &["kernel", "mass", "--levy.alpha", "2.5"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("levy.alpha"));
    assert_eq!(code(&lab(tmp.path(), &["kernel", "mass", "--no.such.key", "1"])), 2);
    assert_eq!(code(&lab(tmp.path(), &["kernel", "mass", "--config", "/nonexistent/x.cfg"])), 2);
}

#[test]
fn verdict_failure_exits_1() {
    // the drift margin is positive at radii around 1e-2 for the demo setup
    let tmp = TempDir::new().unwrap();
    let o = lab(tmp.path(), &["check", "drift", "--drift.eps", "0.03"]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
    let m: Value =
        serde_json::from_slice(&fs::read(tmp.path().join("check-drift/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["verdict"], "fail");
}

#[test]
fn exhausted_budget_exits_3() {
    let tmp = TempDir::new().unwrap();
    let o = lab(tmp.path(), &["simulate", "single", "--sim.max_events", "10"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn rerun_and_thread_count_reproduce_bytes() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args = ["simulate", "couple", "--n", "300", "--t", "0.3", "--log-events", "--seed", "17"];
    let mut first = args.to_vec();
    first.extend(["--threads", "1"]);
    assert_eq!(code(&lab(a.path(), &first)), 0);
    let manifest = a.path().join("simulate-couple/manifest.json");
    let o = lab(b.path(), &["rerun", manifest.to_str().unwrap(), "--threads", "4"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for file in ["results.csv", "events.csv", "summary.json", "config.cfg"] {
        let x = fs::read(a.path().join("simulate-couple").join(file)).unwrap();
        let y = fs::read(b.path().join("simulate-couple").join(file)).unwrap();
        assert!(x == y, "{file} differs after rerun");
    }
}

#[test]
fn config_file_and_overrides_combine() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, "levy.family = homogeneous\nlevy.alpha = 0.5\nkernel.u = 1, -1\n").unwrap();
    let o = lab(tmp.path(), &["kernel", "mass", "--config", cfg.to_str().unwrap(), "--levy.amplitude=2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let written = fs::read_to_string(tmp.path().join("kernel-mass/config.cfg")).unwrap();
    assert!(written.lines().any(|l| l == "levy.alpha = 0.5"), "{written}");
    assert!(written.lines().any(|l| l == "levy.amplitude = 2"), "{written}");
    assert!(written.lines().any(|l| l.starts_with("# levy.truncation = ")), "{written}");
}
