use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AppError {
    #[error(transparent)]
    Core(#[from] riskbound_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("bad sigma spec `{spec}`: {reason}")]
    SigmaSpec { spec: String, reason: String },
    #[error("config: {0}")]
    Config(String),
    #[error("GEV fit failed: {0}")]
    Fit(String),
    #[error("check failed: {0}")]
    Check(String),
}

pub type AppResult<T> = Result<T, AppError>;

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for an infeasible or invalid problem, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        use riskbound_core::Error as E;
        match self {
            Self::Core(
                E::Infeasible
                | E::Empty
                | E::NegativeWeight { .. }
                | E::SumNotOne { .. }
                | E::DimensionMismatch(_)
                | E::NonFiniteLoss { .. }
                | E::AlphaOutOfRange(_)
                | E::InvalidSpectrum(_),
            )
            | Self::SigmaSpec { .. } => 2,
            _ => 1,
        }
    }
}
