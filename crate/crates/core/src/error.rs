use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "row {row} of the factor has weight {weight}; expanding it would generate 2^{weight}-1 \
         monomials, above the cap of {cap} set bits"
    )]
    ExpansionCap { row: usize, weight: usize, cap: usize },

    #[error("{vars} variables exceed the exact-enumeration limit of {limit}")]
    TooManyVariables { vars: usize, limit: usize },

    #[error("remote solver unreachable after {attempts} attempts: {message}")]
    Transport { attempts: usize, message: String },

    #[error("remote solver returned an invalid response: {0}")]
    Protocol(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("gave up after {0} resampling attempts")]
    Exhausted(usize),

    #[error("invalid tree: {0}")]
    Tree(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
