use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("state not bound: requested v={requested}, only {found} bound level(s) found")]
    NotBound { requested: usize, found: usize },

    #[error("no convergence after {iterations} iterations, last bracket [{lo:.3e}, {hi:.3e}]")]
    NoConvergence { iterations: usize, lo: f64, hi: f64 },

    #[error("numerical blow-up at step {step}")]
    BlowUp { step: usize },

    #[error("outgoing flux reached the grid edge (edge norm {edge_norm:.3e})")]
    BoundaryContamination { edge_norm: f64 },

    #[error("incomplete set: {0}")]
    Incomplete(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("corrupt data: {0}")]
    Corrupt(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures caused by numerics rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::BlowUp { .. }
                | Error::BoundaryContamination { .. }
        )
    }
}
