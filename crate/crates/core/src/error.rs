use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("gamma function pole at x = {0}")]
    Pole(f64),

    #[error(
        "quadrature did not converge: error estimate {estimate:e} exceeds tolerance {tolerance:e}"
    )]
    QuadratureNonConvergence { estimate: f64, tolerance: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("requested {requested} {what} but only {available} are available")]
    Exhausted {
        what: &'static str,
        requested: usize,
        available: usize,
    },

    #[error("rejection sampling reached {attempts} attempts without filling the state pool")]
    RejectionExhausted { attempts: usize },

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("truncated file: expected {expected} bytes, found {found}")]
    TruncatedFile { expected: usize, found: usize },

    #[error("checksum mismatch: header says {expected:#010x}, payload hashes to {found:#010x}")]
    ChecksumMismatch { expected: u32, found: u32 },

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
