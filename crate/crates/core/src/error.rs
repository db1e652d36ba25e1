use std::io;

use thiserror::Error;

/// Errors produced by the structure-learning library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex {vertex} out of range for graph with {p} vertices")]
    VertexOutOfRange { vertex: usize, p: usize },

    #[error("self-loop ({0}, {0}) is not a valid edge")]
    SelfLoop(usize),

    #[error("dimension mismatch: expected {expected} variables, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("vertex {0} appears in its own neighborhood")]
    VertexInNeighborhood(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("rate vector does not match graph: {0}")]
    RateMismatch(String),

    #[error("empty trace after removing {burn_in} burn-in iterations")]
    EmptyTrace { burn_in: usize },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    /// Short machine-readable category, used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::VertexOutOfRange { .. } => "vertex_out_of_range",
            Error::SelfLoop(_) => "self_loop",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::VertexInNeighborhood(_) => "vertex_in_neighborhood",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::InvalidData(_) => "invalid_data",
            Error::Parse { .. } => "parse",
            Error::RateMismatch(_) => "rate_mismatch",
            Error::EmptyTrace { .. } => "empty_trace",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
        }
    }
}
