//! Error type shared across the crate.

use std::path::PathBuf;

use crate::solver::ProxCertificate;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Caller passed inconsistent shapes (matrix/vector/partition sizes).
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Caller violated a documented precondition (bad parameter value).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A numerical routine failed (no root bracket, degenerate input, ...).
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Row orthonormalization found a (numerically) dependent row.
    #[error("rank-deficient input: row {row} lies in the span of the rows before it")]
    RankDeficient { row: usize },

    /// The inexact group subproblem solver ran out of iterations before its
    /// certificate was satisfied. Carries the best iterate found.
    #[error(
        "inner prox solver exhausted {max_iter} iterations: residual {residual:.3e} > bound {bound:.3e}"
    )]
    InnerSolver {
        max_iter: usize,
        residual: f64,
        bound: f64,
        best: Vec<f64>,
        certificate: ProxCertificate,
    },

    /// Generated observation came out identically zero; caller should reseed.
    #[error("generated observation is the zero vector; regenerate with a different noise seed")]
    ZeroObservation,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
}

impl Error {
    /// True for errors caused by bad user input rather than numerics.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch(_)
                | Error::InvalidArgument(_)
                | Error::Io { .. }
                | Error::Parse { .. }
        )
    }
}
