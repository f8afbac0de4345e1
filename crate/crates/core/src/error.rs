// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// The update direction is undefined (`w = 0` or `r = 0`).
    #[error("degenerate update: {0}")]
    DegenerateUpdate(&'static str),

    #[error("basis lost rank: column {column} is numerically dependent")]
    RankLoss { column: usize },

    #[error("basis is not orthonormal: |U^T U - I|_F = {drift:e}")]
    NotOrthonormal { drift: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn at_step(step: usize, source: Error) -> Self {
        Error::AtStep {
            step,
            source: Box::new(source),
        }
    }
}
