use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("FORMAT_ERROR: {0}")]
    Format(String),
    #[error("COUNT_MISMATCH: {what}: expected {expected}, found {found}")]
    CountMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("NONFINITE_VALUE: {0}")]
    NonFinite(String),
    #[error("INVALID_OCCURRENCE: record {id}: {reason}")]
    InvalidOccurrence { id: usize, reason: String },
    #[error("UNKNOWN_FEATURE: {0}")]
    UnknownFeature(String),
    #[error("FILTER_SYNTAX: {0}")]
    FilterSyntax(String),
    #[error("UNKNOWN_PROJECTION: {0}")]
    UnknownProjection(String),
    #[error("EMPTY_SELECTION")]
    EmptySelection,
    #[error("DEGENERATE_INPUT: {0}")]
    DegenerateInput(String),
    #[error("TOO_FEW_POINTS: need at least {min}, got {got}")]
    TooFewPoints { min: usize, got: usize },
    #[error("TOO_MANY_POINTS: cap is {max}, got {got}")]
    TooManyPoints { max: usize, got: usize },
    #[error("K_OUT_OF_RANGE: k = {k} must lie in [1, {max}]")]
    KOutOfRange { k: usize, max: usize },
    #[error("MISSING_POSITION: point {0}")]
    MissingPosition(usize),
    #[error("EMPTY_CLUSTER")]
    EmptyCluster,
    #[error("NO_FEATURE_VALUES: no cluster member carries feature {0}")]
    NoFeatureValues(String),
    #[error("OUT_OF_RANGE: {0}")]
    OutOfRange(String),
    #[error("INVALID_CONFIG: {0}")]
    InvalidConfig(String),
    #[error("UNKNOWN_DATASET: {0}")]
    UnknownDataset(String),
    #[error("IO_ERROR: {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable machine-readable code, shared by the CLI and the HTTP service.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Format(_) => "FORMAT_ERROR",
            Error::CountMismatch { .. } => "COUNT_MISMATCH",
            Error::NonFinite(_) => "NONFINITE_VALUE",
            Error::InvalidOccurrence { .. } => "INVALID_OCCURRENCE",
            Error::UnknownFeature(_) => "UNKNOWN_FEATURE",
            Error::FilterSyntax(_) => "FILTER_SYNTAX",
            Error::UnknownProjection(_) => "UNKNOWN_PROJECTION",
            Error::EmptySelection => "EMPTY_SELECTION",
            Error::DegenerateInput(_) => "DEGENERATE_INPUT",
            Error::TooFewPoints { .. } => "TOO_FEW_POINTS",
            Error::TooManyPoints { .. } => "TOO_MANY_POINTS",
            Error::KOutOfRange { .. } => "K_OUT_OF_RANGE",
            Error::MissingPosition(_) => "MISSING_POSITION",
            Error::EmptyCluster => "EMPTY_CLUSTER",
            Error::NoFeatureValues(_) => "NO_FEATURE_VALUES",
            Error::OutOfRange(_) => "OUT_OF_RANGE",
            Error::InvalidConfig(_) => "INVALID_CONFIG",
            Error::UnknownDataset(_) => "UNKNOWN_DATASET",
            Error::Io { .. } => "IO_ERROR",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
