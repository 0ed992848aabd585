use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// `evidence` is dis(v) ∩ de(v) in the graph where fixing was attempted.
    #[error("vertex {vertex} is not fixable (district ∩ descendants = {{{}}})", evidence.join(", "))]
    NotFixable { vertex: String, evidence: Vec<String> },

    #[error("invalid fixing sequence at position {position}: {vertex} is not fixable (district ∩ descendants = {{{}}})", evidence.join(", "))]
    InvalidSequence {
        position: usize,
        vertex: String,
        evidence: Vec<String>,
    },

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("directed cycle through {0}")]
    Cycle(String),

    #[error("CADMG violation: {0}")]
    CadmgViolation(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
