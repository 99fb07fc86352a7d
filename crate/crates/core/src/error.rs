use thiserror::Error;

/// Errors produced by the arithmetic, encryption and similarity layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid modulus")]
    InvalidModulus,

    #[error("no modular inverse")]
    NoModularInverse,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("plaintext out of range")]
    PlaintextOutOfRange,

    #[error("zero plaintext not encodable")]
    ZeroPlaintext,

    #[error("corrupt ciphertext")]
    CorruptCiphertext,

    #[error("vector must have at least one element")]
    EmptyVector,

    #[error("element {index} has magnitude above the declared bound {bound}")]
    ElementOutOfBound { index: usize, bound: u64 },

    #[error(
        "zero element not encodable; use the documented zero-offset convention (element {index})"
    )]
    ZeroElement { index: usize },

    #[error("element {index}: {source}")]
    Element {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("nonce mode mismatch between operands")]
    ModeMismatch,

    #[error("operands were encrypted under different shared nonces")]
    NonceMismatch,

    #[error("undefined feature weight (feature column {index} is zero)")]
    UndefinedFeatureWeight { index: usize },

    #[error("invalid weight matrix: {0}")]
    InvalidWeights(String),

    #[error("aggregate overflow; capacity_check violated ({0})")]
    AggregateOverflow(String),

    #[error("capacity exceeded: {0}")]
    CapacityExceeded(String),

    #[error("undefined similarity for zero vector")]
    ZeroVector,

    #[error("degenerate Tanimoto input")]
    DegenerateTanimoto,

    #[error("invalid weight matrix for these vectors")]
    InvalidWeightMatrix,

    #[error("soft cosine requires a weight matrix")]
    MissingWeights,

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("benchmark correctness check failed: {0}")]
    BenchMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn at_element(self, index: usize) -> Self {
        Error::Element {
            index,
            source: Box::new(self),
        }
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
