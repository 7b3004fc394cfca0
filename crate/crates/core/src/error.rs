//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("incompatible right-hand side: defect {defect:.3e} exceeds tolerance {tol:.3e}")]
    Incompatible { defect: f64, tol: f64 },
    #[error("extension inconsistent with interior operator action: {0}")]
    InconsistentExtension(String),
    #[error("mesh error: {0}")]
    Mesh(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("strong ellipticity margin not positive: {margin:.3e}")]
    NotElliptic { margin: f64 },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
