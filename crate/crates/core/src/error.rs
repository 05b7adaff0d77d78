//! Error type shared by all modules.

use thiserror::Error;

/// Errors reported by validation, reduction and the numerical oracles.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not Hermitian: max entry deviation {deviation:.3e}")]
    NotHermitian { deviation: f64 },

    #[error("form is not positive semidefinite: eigenvalue {eigenvalue:.6e} below tolerance {tol:.3e}")]
    NotPsd { eigenvalue: f64, tol: f64 },

    #[error("form matrix is not alternating: max |sigma + sigma^T| entry {deviation:.3e}")]
    NotAlternating { deviation: f64 },

    #[error("covariance condition violated: max |Im(M) - sigma/2| entry {deviation:.3e}")]
    CovarianceMismatch { deviation: f64 },

    #[error("states live on different presymplectic spaces: max sigma deviation {deviation:.3e}")]
    SpaceMismatch { deviation: f64 },

    #[error("integration oracle undefined for a degenerate instance; reduce the pair first")]
    DegenerateOracle,

    #[error("dimension {dim} exceeds the oracle maximum {max}")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("tensor quadrature with {points} points exceeds the cap of {cap}")]
    QuadratureTooLarge { points: u128, cap: u128 },

    #[error("truncation step {step} is degenerate")]
    SingularStep { step: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
