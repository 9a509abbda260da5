//! Tables, summaries and the on-disk layout of a run.
//!
//! A run directory holds `results.csv` (plus any extra tables), `summary.json`,
//! `config.cfg` with the resolved config, and `manifest.json` with content
//! hashes. Every file is written to a temporary sibling and renamed into place.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value as Json};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::LabError;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file: &str, header: &[&str]) -> Self {
        Table {
            file: file.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_header(file: &str, header: Vec<String>) -> Self {
        Table {
            file: file.to_string(),
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len(), "{}: row width", self.file);
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, LabError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| LabError::Io(e.into_error()))
    }
}

/// Shortest representation that reparses to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn coords(p: &[f64]) -> impl Iterator<Item = String> + '_ {
    p.iter().map(|&v| num(v))
}

pub fn axis_names(prefix: &str, d: usize) -> impl Iterator<Item = String> + '_ {
    (1..=d).map(move |i| format!("{prefix}{i}"))
}

#[derive(Debug, Clone)]
pub struct Report {
    /// Subcommand words, e.g. `check operator-identity`.
    pub command: String,
    pub pass: bool,
    pub tables: Vec<Table>,
    pub summary: Json,
    /// Optional gnuplot script body.
    pub plot: Option<String>,
}

impl Report {
    pub fn dir_name(&self) -> String {
        self.command.replace(' ', "-")
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), LabError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

/// Writes the run into `<out>/<command-words>/` and returns that directory.
pub fn emit(report: &Report, cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf, LabError> {
    let dir = out.join(report.dir_name());
    fs::create_dir_all(&dir)?;
    let config_text = cfg.serialize();
    let mut files = serde_json::Map::new();
    for t in &report.tables {
        let body = t.to_csv()?;
        write_atomic(&dir.join(&t.file), &body)?;
        files.insert(t.file.clone(), Json::String(sha256_hex(&body)));
    }
    let summary = serde_json::to_vec_pretty(&report.summary)?;
    write_atomic(&dir.join("summary.json"), &summary)?;
    files.insert("summary.json".into(), Json::String(sha256_hex(&summary)));
    if let Some(plot) = &report.plot {
        write_atomic(&dir.join("plot.gp"), plot.as_bytes())?;
        files.insert("plot.gp".into(), Json::String(sha256_hex(plot.as_bytes())));
    }
    write_atomic(&dir.join("config.cfg"), config_text.as_bytes())?;
    let created = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": report.command,
        "verdict": if report.pass { "pass" } else { "fail" },
        "config_sha256": sha256_hex(config_text.as_bytes()),
        "config": config_text,
        "provenance": cfg.explicit_keys(),
        "files": files,
        "created_unix": created,
    });
    write_atomic(&dir.join("manifest.json"), &serde_json::to_vec_pretty(&manifest)?)?;
    Ok(dir)
}

/// Command words and config text recorded in a manifest.
pub fn read_manifest(path: &Path) -> Result<(String, String), LabError> {
    let text = fs::read_to_string(path)?;
    let m: Json = serde_json::from_str(&text)?;
    let field = |k: &str| {
        m.get(k)
            .and_then(Json::as_str)
            .map(str::to_string)
            .ok_or_else(|| LabError::Usage(format!("{}: manifest has no `{k}`", path.display())))
    };
    Ok((field("command")?, field("config")?))
}
