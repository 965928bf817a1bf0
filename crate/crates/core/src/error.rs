use std::path::PathBuf;

use h2bid_lp::LpError;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid plant parameters: {0}")]
    InvalidParams(String),
    #[error("invalid market hour {t}: {msg}")]
    InvalidHour { t: usize, msg: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("optimization problem infeasible: {0}")]
    Infeasible(String),
    #[error("solver failure: {0}")]
    Solver(#[from] LpError),
    #[error("{file}: line {line}: {msg}")]
    Parse {
        file: String,
        line: u64,
        msg: String,
    },
    #[error("{file}: gap in hourly series, expected {expected} but found {found}")]
    Gap {
        file: String,
        expected: String,
        found: String,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
