use thiserror::Error;

/// Errors raised by the toolkit. Each variant maps onto one of the runner's
/// exit codes (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("pole on fiber: {0}")]
    PoleOnFiber(String),

    #[error("precision exhausted: {msg} (suggested precision: {suggested} bits)")]
    PrecisionExhausted { msg: String, suggested: u32 },

    #[error("integrality refused: {0}")]
    IntegralityRefused(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("attestation failed: {0}")]
    Attestation(String),

    #[error("degenerate family: {0}")]
    Degenerate(String),

    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse {
        line: usize,
        column: usize,
        msg: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Runner exit status: 1 verdict failure, 2 configuration error,
    /// 3 numerical escalation exhausted.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parse { .. } | Error::Io { .. } => 2,
            Error::PrecisionExhausted { .. } => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
