use std::io;

use thiserror::Error;

/// Errors raised by the spectral laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension must be 1, 2 or 3, got {0}")]
    InvalidDimension(usize),
    #[error("points per axis must be a power of two >= 8, got {0}")]
    InvalidPoints(usize),
    #[error("box length must be positive and finite, got {0}")]
    InvalidLength(f64),
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("inverse transform left imaginary residue {residue:.3e} above bound {bound:.3e}")]
    ImaginaryResidue { residue: f64, bound: f64 },
    #[error("field contains non-finite values")]
    NonFinite,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("cannot fit decay: {0}")]
    Fit(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
    #[error("experiment {experiment} has no parameter `{key}`")]
    UnknownKey { experiment: String, key: String },
    #[error("parameter `{0}` has no value")]
    MissingKey(String),
    #[error("cannot write {path}: {source}")]
    Output { path: String, source: io::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
