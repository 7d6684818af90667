//! Multi-seed experiment runner, learning-curve metrics and the gap calculator.

pub mod config;
pub mod curve;
pub mod gap;
pub mod metrics;
pub mod runner;

pub use config::{AgentKind, ArmKind, ArmSpec, DqnSettings, ExperimentConfig, Sweep, TabularSettings};
pub use curve::{CurveCsvWriter, EpisodeRecord, EpisodeSink, LearningCurve, NullSink};
pub use gap::{generalization_gap, summarize_arm, ArmSummary, GapMetric, GapReport};
pub use metrics::{curve_auc, iqr, median, quantile, steps_to_threshold};
pub use runner::{
    dqn_config, run_experiment, run_single, ExperimentOutcome, Manifest, ManifestRun, RunRecord, RunStatus,
    CONFIG_FILE, MANIFEST_FILE,
};

use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("stream: {0}")]
    Stream(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid learning curve: {0}")]
    InvalidCurve(String),
    #[error("arm `{arm}` has {runs} runs; at least 2 are required")]
    InsufficientRuns { arm: String, runs: usize },
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("run failed: {0}")]
    Run(String),
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.to_path_buf(), source }
    }
}
