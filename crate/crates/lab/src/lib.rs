//! Config-driven runner for the `synergy-core` experiments.
//!
//! Each experiment reads a strict JSON config, produces ordered report rows
//! with pass/fail verdicts and renders them as CSV, JSON or plot data.

pub mod config;
pub mod experiments;
pub mod report;

use std::path::PathBuf;

pub use config::{Experiment, ExperimentConfig};
pub use experiments::{run_experiment, Output};
pub use report::{Format, ReportRow};

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("config error: {0}")]
    Config(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("{0}")]
    Core(#[from] synergy_core::Error),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{} verdict failure(s):\n{}", .0.len(), .0.join("\n"))]
    Verdicts(Vec<String>),
}

impl LabError {
    /// 3 for unreadable configs, 2 for numerical trouble and failed
    /// verdicts, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        use synergy_core::Error as E;
        match self {
            LabError::Config(_) | LabError::Core(E::Config(_)) => 3,
            LabError::Verdicts(_)
            | LabError::Core(E::Numerical(_) | E::Unconverged { .. } | E::Divergence { .. }) => 2,
            _ => 1,
        }
    }
}

/// Everything the command line supplies besides the experiment name.
#[derive(Debug, Clone, Default)]
pub struct Invocation {
    pub config: Option<PathBuf>,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub bits: bool,
}

fn read_config(path: &Option<PathBuf>) -> Result<ExperimentConfig, LabError> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| LabError::Io { path: p.clone(), source })?;
            ExperimentConfig::parse(&text)
        }
        None => Ok(ExperimentConfig::default()),
    }
}

/// Run, render and write. Returns the rendered text when it went to stdout.
pub fn execute(experiment: Experiment, inv: &Invocation) -> Result<Option<String>, LabError> {
    let mut config = read_config(&inv.config)?;
    if let Some(seed) = inv.seed {
        config.seed = seed;
    }
    let out = run_experiment(experiment, &config)?;
    let text = report::render(&out.rows, inv.format, out.plot.as_ref(), inv.bits)?;
    let target = inv.out.clone().or(config.output_path.clone());
    let printed = match target {
        Some(path) => {
            std::fs::write(&path, &text).map_err(|source| LabError::Io { path, source })?;
            None
        }
        None => Some(text),
    };
    let failures: Vec<String> = out
        .rows
        .iter()
        .enumerate()
        .flat_map(|(i, r)| r.failures().into_iter().map(move |f| format!("row {i}: {f}")))
        .collect();
    if failures.is_empty() {
        Ok(printed)
    } else {
        if let Some(t) = &printed {
            print!("{t}");
        }
        Err(LabError::Verdicts(failures))
    }
}

/// Apply the `SYNERGY_LAB_THREADS` cap to the global thread pool.
pub fn configure_threads() -> Result<(), LabError> {
    let Ok(v) = std::env::var("SYNERGY_LAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| LabError::Usage(format!("SYNERGY_LAB_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| LabError::Usage(e.to_string()))
}
