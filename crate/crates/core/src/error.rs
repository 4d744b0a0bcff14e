use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty sentence")]
    EmptySentence,
    #[error("invalid activation: non-finite entry in condition {id}")]
    InvalidActivation { id: String },
    #[error("incomplete layer: missing condition {id}")]
    IncompleteLayer { id: String },
    #[error("duplicate condition {id}")]
    DuplicateCondition { id: String },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("mixed measure tags: {first} vs {second}")]
    MixedMeasures { first: String, second: String },
    #[error("singular covariance")]
    SingularCovariance,
    #[error("zero rank variance")]
    ZeroRankVariance,
    #[error("constant input")]
    ConstantInput,
    #[error("non-finite value in input")]
    NonFinite,
    #[error("condition set mismatch")]
    ConditionSetMismatch,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("degenerate factor {name}: fewer than two observed levels")]
    DegenerateFactor { name: String },
    #[error("no residual degrees of freedom")]
    NoResidualDf,
    #[error("layer index {index} out of range 1..={n_layers}")]
    LayerOutOfRange { index: usize, n_layers: usize },
    #[error("missing layer pair {i}-{j}")]
    MissingPair { i: usize, j: usize },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the filesystem rather than of the data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_))
    }
}
