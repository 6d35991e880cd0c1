use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point coordinates must be finite")]
    NonFiniteCoordinate,

    #[error("point set must not be empty")]
    EmptyPointSet,

    #[error("k = {k} out of range for {n} points")]
    KOutOfRange { k: usize, n: usize },

    #[error("m = {m} out of range for {n} samples")]
    MOutOfRange { m: usize, n: usize },

    #[error("gamma must be positive and finite, got {0}")]
    InvalidGamma(f64),

    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: u32, n_classes: usize },

    #[error("class count must be at least 1")]
    NoClasses,

    #[error("duplicate prototypes at indices {i} and {j}")]
    DuplicatePrototypes { i: usize, j: usize },

    #[error("LP did not converge for prototype pair ({i}, {j})")]
    LpFailure { i: usize, j: usize },

    #[error("neighbor graph has {graph} vertices but rule has {rule} prototypes")]
    GraphSizeMismatch { graph: usize, rule: usize },

    #[error("point with norm {0} lies outside the unit ball")]
    OutOfSupport(f64),

    #[error("{0}")]
    InvalidArgument(String),

    #[error("size bound overflowed: {0}")]
    Overflow(String),

    #[error("csv line {line}: {msg}")]
    Csv { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
