//! Experiment harness around `levy-coupling-core`: flat key-value configs,
//! subcommand runners, a rayon-backed executor and deterministic CSV/JSON
//! output with a hashed manifest.

pub mod commands;
pub mod config;
pub mod report;

use rayon::prelude::*;

use levy_coupling_core::estimators::Executor;

pub use commands::{run, Command};
pub use config::ExperimentConfig;
pub use report::{emit, Report, Table};

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("{0}")]
    Usage(String),
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {message}")]
    Config { key: String, message: String },
    #[error(transparent)]
    Core(#[from] levy_coupling_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl LabError {
    pub fn config(key: &str, message: impl Into<String>) -> Self {
        LabError::Config {
            key: key.to_string(),
            message: message.into(),
        }
    }

    /// 3 for exhausted numeric budgets, 2 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            LabError::Core(e) if e.is_budget() => 3,
            _ => 2,
        }
    }
}

/// Fans trajectories out over a rayon pool. Results come back in index
/// order, so output does not depend on the thread count.
pub struct Parallel {
    pool: rayon::ThreadPool,
}

impl Parallel {
    /// `threads = 0` uses rayon's default.
    pub fn new(threads: usize) -> Result<Self, LabError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| LabError::Usage(format!("thread pool: {e}")))?;
        Ok(Parallel { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for Parallel {
    fn map<T, F>(&self, n: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        self.pool.install(|| (0..n).into_par_iter().map(f).collect())
    }
}
