use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A caller supplied inconsistent or out-of-range arguments.
    #[error("usage error: {0}")]
    Usage(String),

    /// A mathematical precondition failed (inverse of zero, probability out of range, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("could not generate an invertible decoding matrix after {attempts} attempts")]
    GenerationFailure { attempts: usize },

    /// The client is still missing packets it needs to decode.
    #[error("client {client} cannot decode yet: missing packets {missing:?}")]
    NotYetDecodable { client: usize, missing: Vec<usize> },

    #[error("recovery did not terminate within {rounds} rounds")]
    RoundCap { rounds: usize },

    /// Cooperative seeding cannot cover a packet when every transmission is erased.
    #[error("non-termination: erasure probability 1 prevents coverage")]
    NonTermination,

    #[error("infeasible instance: packet {packet} is wanted but held by no cluster member")]
    Infeasible { packet: usize },

    #[error("audit failure in round {round} for client {client}: {reason}")]
    Audit {
        round: usize,
        client: usize,
        reason: String,
    },

    /// A closed-form result is undefined for the given parameters.
    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

pub(crate) fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: msg.into(),
    }
}
