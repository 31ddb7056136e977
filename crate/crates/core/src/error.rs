use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{file}:{line}: {message}")]
    MalformedRow {
        file: String,
        line: u64,
        message: String,
    },

    #[error("no dates shared by all requested tickers")]
    EmptyIntersection,

    #[error("ticker {ticker} has {count} valid closes, at least 2 are required")]
    InsufficientCloses { ticker: String, count: usize },

    #[error("non-positive close {value} for {ticker} on day {day}")]
    NonPositiveClose {
        ticker: String,
        day: usize,
        value: f64,
    },

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("expression parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("unknown series or alpha `{0}`")]
    UnknownName(String),

    #[error("no day with a defined position")]
    NoDefinedDays,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("insufficient history: need {needed} observations, have {available}")]
    InsufficientHistory { needed: usize, available: usize },

    #[error("matrix is not symmetric: |a[{row}][{col}] - a[{col}][{row}]| = {diff:e}")]
    NotSymmetric { row: usize, col: usize, diff: f64 },

    #[error("Jacobi iteration did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error(
        "degenerate covariance (min/max eigenvalue {ratio:e}); near-constant combination {direction:?}"
    )]
    DegenerateCovariance { direction: Vec<f64>, ratio: f64 },

    #[error(
        "turnover/std ratios are not constant (min {min}, max {max}, spread {spread}); supply kappa explicitly"
    )]
    NonConstantRatio { min: f64, max: f64, spread: f64 },

    #[error("undefined quantity: {0}")]
    Undefined(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
