use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Shapes, lengths or label ranges that do not fit together.
    #[error("structural error: {0}")]
    Structural(String),

    #[error("distribution is not normalized: entries sum to {sum}")]
    NotNormalized { sum: f64 },

    #[error("negative probability {value} at index {index}")]
    NegativeProbability { index: usize, value: f64 },

    #[error("stage {stage} is not perfect recall: label {label} is shared by prefixes {first:?} and {second:?}")]
    NotPerfectRecall {
        stage: usize,
        label: usize,
        first: Vec<usize>,
        second: Vec<usize>,
    },

    #[error("matrix is not Hermitian: max entrywise deviation {deviation:e}")]
    NotHermitian { deviation: f64 },

    #[error("trace is {trace}, expected 1")]
    Trace { trace: f64 },

    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue}")]
    NotPositive { eigenvalue: f64 },

    #[error("POVM elements do not sum to identity: max entrywise deviation {deviation}")]
    Completeness { deviation: f64 },

    #[error("Born-rule probability for outcome index {index} has imaginary part {imaginary:e}")]
    ImaginaryProbability { index: usize, imaginary: f64 },

    #[error("Born-rule distribution drifts from unit mass by {drift:e}")]
    NormalizationDrift { drift: f64 },

    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),

    #[error("states for latent values {first} and {second} have different outputs but overlap {overlap}")]
    NotDistinguishable { first: usize, second: usize, overlap: f64 },

    #[error("invalid construction input: {0}")]
    Construction(String),

    #[error("unknown example `{name}`; valid names: {valid}")]
    UnknownExample { name: String, valid: String },
}

pub(crate) fn structural(msg: impl Into<String>) -> Error {
    Error::Structural(msg.into())
}
