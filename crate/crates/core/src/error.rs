use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("value {value} outside domain {domain}")]
    Domain { value: f64, domain: &'static str },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("LFSR register is all zero")]
    ZeroRegister,

    #[error("unsupported LFSR degree {0} (supported: 4, 8, 16, 32)")]
    UnsupportedDegree(u32),

    #[error("permutation is not bijective: sources {first} and {second} both map to {target}")]
    NonBijective {
        target: usize,
        first: usize,
        second: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid Cross stage distance {0} (expected 1, 2 or 4)")]
    InvalidStage(u8),

    #[error("inconsistent configuration: {0}")]
    Config(String),

    #[error("ciphertext header mismatch: {0}")]
    HeaderMismatch(String),

    #[error("malformed container: {0}")]
    Container(String),

    #[error("truncated data: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("image format: {0}")]
    ImageFormat(String),

    #[error("empty input")]
    Empty,

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
