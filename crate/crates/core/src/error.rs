use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the estimation toolkit.
///
/// Variants are grouped by the stage that produces them so that callers
/// (and the command-line front end) can report where a run failed.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    // dataset
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}: cannot parse date `{value}`")]
    BadDate { row: usize, value: String },
    #[error("dates are not contiguous daily: gap between {prev} and {next}")]
    DateGap { prev: String, next: String },
    #[error("row {row}: missing or non-numeric value in column `{column}`")]
    MissingValue { row: usize, column: String },
    #[error("{treatments} treatment(s) but {instruments} instrument(s); the design must be just identified")]
    IdentificationCount { treatments: usize, instruments: usize },
    #[error("series `{0}` has zero variance")]
    ZeroVariance(String),
    #[error("series lengths differ: {0}")]
    LengthMismatch(String),
    #[error("need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },

    // design
    #[error("not enough observations: raw length {raw} with L={lags}, H={horizons}")]
    InsufficientData { raw: usize, lags: usize, horizons: usize },
    #[error("trimmed sample T={t} must exceed the regressor count J={j}")]
    TooFewOrigins { t: usize, j: usize },

    // gmm / linear algebra
    #[error("Z'X is singular or ill-conditioned (condition number {0:.3e})")]
    IllConditioned(f64),
    #[error("{what}: matrix not positive definite after maximum jitter")]
    NotPositiveDefinite { what: &'static str },
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    // prior / sampler / inference
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("chain has no retained draws")]
    EmptyChain,
    #[error("negative variance {value} at coordinate {coord}")]
    NegativeVariance { coord: usize, value: f64 },
    #[error("unknown treatment `{0}`")]
    UnknownTreatment(String),

    // instruments
    #[error("expected 24 hourly values for {day}, got {got}")]
    HourCount { day: String, got: usize },
    #[error("negative solar radiation value {0}")]
    NegativeRadiation(f64),
    #[error("capacities are all zero{0}")]
    ZeroCapacity(String),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
