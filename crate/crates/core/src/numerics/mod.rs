//! Dense linear-algebra kernels shared by every estimator.
//!
//! Everything here works on small matrices (dimension capped at
//! [`MAX_DIM`]) and reports degeneracy as a typed error instead of falling
//! back to pseudo-inverses: small-sample collinearity has to surface to the
//! caller, who typically responds by dropping a variable.

mod decomp;
mod eigen;
mod matrix;
mod ols;

pub use decomp::{
    cholesky_factor, lu_solve, solve_lower, solve_upper, spd_inverse, symmetric_eigendecomposition, thin_qr,
    SymmetricEigen,
};
pub use eigen::{general_eigenvalues, Complex};
pub use matrix::Matrix;
pub use ols::{ols_fit, OlsFit};

use thiserror::Error;

/// Largest square dimension accepted by the solvers.
pub const MAX_DIM: usize = 64;

/// Relative pivot threshold below which a regressor column is declared
/// linearly dependent on the preceding ones.
pub const SINGULARITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("singular regressor matrix: column {column} is linearly dependent on earlier columns")]
    Singular { column: usize },
    #[error("matrix is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("matrix is not symmetric (relative asymmetry {0:.3e})")]
    NotSymmetric(f64),
    #[error("{0} did not converge within the iteration cap")]
    NoConvergence(&'static str),
    #[error("dimension {0} exceeds the supported maximum of {MAX_DIM}")]
    TooLarge(usize),
}

pub(crate) fn check_dim(n: usize) -> Result<(), NumericsError> {
    if n > MAX_DIM {
        Err(NumericsError::TooLarge(n))
    } else {
        Ok(())
    }
}
