use thiserror::Error;

/// Errors raised by the simulation core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid string model: {0}")]
    InvalidString(String),

    #[error("quadrature did not converge after {panels} panels (partial estimate {estimate:e}, error estimate {error:e})")]
    Quadrature {
        estimate: f64,
        error: f64,
        panels: usize,
    },

    #[error("root bracket failure: {0}")]
    Bracket(String),

    #[error("string is not in class M (integral of x dm diverges near 0); time change refused: {0}")]
    NotTimeChangeable(String),

    #[error("step cap of {cap} exceeded: {context}")]
    StepCap { cap: usize, context: String },

    #[error("path is open-ended: {0}")]
    OpenEnded(String),

    #[error("acceptance rate too low: {accepted} accepted of {attempted} attempts; {hint}")]
    AcceptanceFloor {
        accepted: usize,
        attempted: usize,
        hint: String,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for errors produced by a numerical routine (quadrature, root finding).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Quadrature { .. } | Error::Bracket(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
