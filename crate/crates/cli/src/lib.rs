//! Command pipeline behind the `sfem` executable.

pub mod config;
pub mod pipeline;

use sfem::chaining::ChainingError;
use sfem::corpus::CorpusError;
use sfem::eval::EvalError;
use sfem::knowledge::KnowledgeError;
use sfem::synth::SynthError;
use sfem::training::TrainError;
use thiserror::Error;

pub use config::{Precision, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error("input: {0}")]
    Input(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    /// 1 for invariant violations and numerical aborts, 2 for bad
    /// configuration, input or IO.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invariant(_) | CliError::Numerical(_) => 1,
            CliError::Config(_) | CliError::Io(_) | CliError::Input(_) => 2,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Io(e) => e.into(),
            CorpusError::InvalidThresholds(m) => CliError::Config(m),
            e => CliError::Input(e.to_string()),
        }
    }
}

impl From<KnowledgeError> for CliError {
    fn from(e: KnowledgeError) -> Self {
        match e {
            KnowledgeError::Io(e) => e.into(),
            KnowledgeError::Linalg(e) => CliError::Numerical(e.to_string()),
            e => CliError::Input(e.to_string()),
        }
    }
}

impl From<ChainingError> for CliError {
    fn from(e: ChainingError) -> Self {
        CliError::Invariant(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Io(e) => e.into(),
            EvalError::Linalg(e) => CliError::Numerical(e.to_string()),
            e => CliError::Invariant(e.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        if e.is_numerical() {
            return CliError::Numerical(e.to_string());
        }
        match e {
            TrainError::Io(e) => e.into(),
            TrainError::Knowledge(e) => e.into(),
            TrainError::InvalidSplit(m) => CliError::Config(m),
            e @ TrainError::Checkpoint { .. } => CliError::Input(e.to_string()),
            e => CliError::Invariant(e.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Config(m) => CliError::Config(m),
            e => CliError::Io(e.to_string()),
        }
    }
}
