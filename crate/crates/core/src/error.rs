use std::io;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid arguments: shape mismatches, out-of-range indices, bad parameters.
    #[error("invalid input: {0}")]
    Input(String),

    /// A text input could not be parsed. `line` is 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Every sample coincides, so the average pairwise distance is zero.
    #[error("degenerate bandwidth: all samples are identical")]
    DegenerateBandwidth,

    /// An alignment operand is constant after double-centering.
    #[error("undefined alignment: centered matrix has zero norm")]
    UndefinedAlignment,

    /// The Armijo-Goldstein search hit its doubling cap without accepting a step.
    #[error("step search failed after {backtracks} increases of A (last A = {last_a:e})")]
    StepFailure { backtracks: usize, last_a: f64 },

    /// A numerical routine produced non-finite or otherwise unusable output.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A model file is malformed or truncated.
    #[error("deserialization error: {0}")]
    Deserialize(String),

    /// A loaded or constructed object violates one of its invariants.
    #[error("invariant violation: {0}")]
    Invariant(String),

    /// One repeat of an experiment failed.
    #[error("repeat {index}: {source}")]
    Repeat { index: usize, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::StepFailure { .. } | Error::Numerical(_) | Error::UndefinedAlignment => true,
            Error::Repeat { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
