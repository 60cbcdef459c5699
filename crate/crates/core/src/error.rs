use thiserror::Error;

/// Errors produced by the simulation and spectral routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("offset {offset:?} does not fit lattice extents {extents:?}: periodic wrap would be ambiguous")]
    OffsetTooLarge { offset: Vec<i64>, extents: Vec<usize> },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operation unsupported for this noise process: {0}")]
    UnsupportedProcess(String),

    #[error("configuration space has {states} states, exceeding the cap of {cap}")]
    ConfigCapExceeded { states: usize, cap: usize },

    #[error("operator dimension {dim} exceeds the dense cap of {cap}")]
    DenseCapExceeded { dim: usize, cap: usize },

    #[error("estimate flagged invalid: {0}")]
    InvalidEstimate(String),

    #[error("argument outside the analyticity region: {0}")]
    OutsideRegion(String),

    #[error("wrap-contamination guard violated: {0}")]
    GuardViolated(String),

    #[error("eigenvalue identification ambiguous: {0}")]
    AmbiguousEigenvalue(String),

    #[error("diffusion matrix not positive definite: min eigenvalue {min_eig}")]
    IndefiniteDiffusion { min_eig: f64 },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("iteration failed to converge: {0}")]
    NoConvergence(String),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
