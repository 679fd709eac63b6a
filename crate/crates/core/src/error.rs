//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh resolution must be at least 2, got {0}")]
    InvalidResolution(usize),

    #[error("point ({0}, {1}) lies outside the closed unit square")]
    PointOutsideDomain(f64, f64),

    #[error("point source requires an even resolution so the centre is a node, got m = {0}")]
    OddResolution(usize),

    #[error("matrix is numerically singular at pivot row {row} (|pivot| = {magnitude:.3e})")]
    SingularMatrix { row: usize, magnitude: f64 },

    #[error("coarse operator is numerically singular even after rank filtering")]
    SingularCoarseOperator,

    #[error("subdomain {0}: {1}")]
    Subdomain(usize, Box<Error>),

    #[error("subdomain count {0} out of range")]
    InvalidSubdomainCount(usize),

    #[error("overlap width must be an even number of element layers >= 2, got {0}")]
    InvalidOverlap(usize),

    #[error("decomposition has no overlap; extend it before building the preconditioner")]
    NotOverlapping,

    #[error("subdomain covers the whole domain, interface is empty")]
    EmptyInterface,

    #[error("coarse space is empty: no eigenvector passed the threshold in any subdomain")]
    EmptyCoarseSpace,

    #[error(
        "eigensolver did not converge: {converged} of {requested} pairs at tolerance {tol:.1e}"
    )]
    EigensolverStalled {
        converged: usize,
        requested: usize,
        tol: f64,
    },

    #[error("Arnoldi breakdown with residual {residual:.3e} above tolerance {tol:.3e}")]
    Breakdown { residual: f64, tol: f64 },

    #[error("operator dimensions do not match: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Wrap an error with the id of the subdomain it occurred in.
    pub fn in_subdomain(self, s: usize) -> Error {
        Error::Subdomain(s, Box::new(self))
    }
}
