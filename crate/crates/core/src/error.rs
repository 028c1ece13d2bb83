use std::path::PathBuf;

/// Every failure the forecasting engine can report.
///
/// Display strings start with the variant name so command-line callers and
/// log scrapers can match on it.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("InvalidCoordinate: {0}")]
    InvalidCoordinate(String),
    #[error("PoleProximity: latitude {lat} is within 0.1 degrees of a pole")]
    PoleProximity { lat: f64 },
    #[error("EquatorialSingularity: latitude {lat} is within 0.5 degrees of the equator")]
    EquatorialSingularity { lat: f64 },
    #[error("NonPositiveArea: iceberg area must be > 0 km^2, got {0}")]
    NonPositiveArea(f64),
    #[error("InvalidInput: {0}")]
    InvalidInput(String),
    #[error("LengthMismatch: {0}")]
    LengthMismatch(String),
    #[error("EmptySequence: metrics need at least one trajectory point")]
    EmptySequence,
    #[error("ModeCountMismatch: expected {expected} spectral modes, got {got}")]
    ModeCountMismatch { expected: usize, got: usize },
    #[error("ShapeMismatch: {0}")]
    ShapeMismatch(String),
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
    #[error("IoFailure: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("VersionMismatch: {0}")]
    VersionMismatch(String),
    #[error("CorruptCheckpoint: {0}")]
    CorruptCheckpoint(String),
    #[error("EmptyDataset: no data rows")]
    EmptyDataset,
    #[error("InsufficientData: {0}")]
    InsufficientData(String),
    #[error("DivergedLoss: non-finite {which} loss at epoch {epoch}")]
    DivergedLoss { epoch: usize, which: &'static str },
    #[error("HorizonMismatch: {0}")]
    HorizonMismatch(String),
    #[error("MissingColumn: {path}: no column for `{column}`")]
    MissingColumn { path: PathBuf, column: String },
    #[error("ParseFailure: {path}:{line}: column `{column}`: {message} (content: {content:?})")]
    ParseFailure {
        path: PathBuf,
        line: u64,
        column: String,
        content: String,
        message: String,
    },
    #[error("EmptyJoin: {0}")]
    EmptyJoin(String),
    #[error("UnfillableGap: field `{field}` has no observations in the position date range")]
    UnfillableGap { field: &'static str },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
