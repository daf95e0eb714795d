use std::path::PathBuf;

use thiserror::Error;
use uavtrace_core::clustering::ClusterError;
use uavtrace_core::pipeline::PipelineError;
use uavtrace_core::scoring::ScoringError;

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_INPUT: u8 = 3;
pub const EXIT_LOW_CONFIDENCE: u8 = 4;
pub const EXIT_NO_OVERLAP: u8 = 5;
pub const EXIT_NO_TARGET: u8 = 6;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("evaluation failed: {0}")]
    NoOverlap(String),
    #[error("no target: {0}")]
    NoTarget(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Input(_) | CliError::Output { .. } => EXIT_INPUT,
            CliError::NoOverlap(_) => EXIT_NO_OVERLAP,
            CliError::NoTarget(_) => EXIT_NO_TARGET,
        }
    }

    pub fn output(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Output {
            path: path.into(),
            source,
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Cluster(ClusterError::InvalidParams(m)) => CliError::Config(m),
            PipelineError::Scoring(ScoringError::InvalidParams(m)) => CliError::Config(m),
            PipelineError::Voxel(v) => CliError::Config(v.to_string()),
            PipelineError::Scoring(ScoringError::NoClusters) | PipelineError::Trajectory(_) => {
                CliError::NoTarget(e.to_string())
            }
            other => CliError::Input(other.to_string()),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
