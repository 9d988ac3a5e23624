use std::path::{Path, PathBuf};

use thiserror::Error;

/// Every message starts with its category, e.g. `config: missing field ...`.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("input: {0}")]
    Input(String),
    /// Invalid structure, copula, marginal or distortion.
    #[error("model: {0}")]
    Model(String),
    /// Prediction, simulation or fitting failed on valid input.
    #[error("compute: {0}")]
    Compute(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Config(_) => 3,
            Self::Io { .. } => 4,
            Self::Input(_) => 5,
            Self::Model(_) => 6,
            Self::Compute(_) => 7,
        }
    }
}

macro_rules! compute_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                Self::Compute(e.to_string())
            }
        }
    )*};
}

compute_from!(
    syspred::PredictorError,
    syspred::montecarlo::MonteCarloError,
    syspred::QrError
);

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Input(e.to_string())
    }
}
