//! Complex sparse direct factorization and small dense solves.
//!
//! Sparse matrices are factored by a multifrontal LU over a nested-dissection
//! assembly tree. The same machinery can stop before the trailing block and
//! return its dense Schur complement.

mod dense;
mod multifrontal;
mod ordering;

use std::sync::Arc;

use faer::c64;
use thiserror::Error;

pub use dense::{dense_solve, DenseLu, DenseSolution};
pub use multifrontal::{schur_complement, Factorization, SchurComplement, SymbolicFactorization};

use crate::sparse::CsrMatrix;

pub type ComplexSparse = CsrMatrix<c64>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SolveError {
    #[error("numerically singular matrix{}: {detail}", eta.map(|e| format!(" at eta = {e}")).unwrap_or_default())]
    Singular { eta: Option<c64>, detail: String },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is {nrows}x{ncols}, not square")]
    NotSquare { nrows: usize, ncols: usize },
    #[error("sparsity pattern is not structurally symmetric")]
    UnsymmetricPattern,
    #[error("matrix pattern differs from the analyzed pattern")]
    PatternMismatch,
    #[error("matrix has non-finite entries")]
    NonFinite,
}

impl SolveError {
    /// Attaches the spectral parameter at which the failure occurred.
    pub fn at_eta(self, at: c64) -> Self {
        match self {
            SolveError::Singular { detail, .. } => SolveError::Singular { eta: Some(at), detail },
            other => other,
        }
    }

    pub fn is_singular(&self) -> bool {
        matches!(self, SolveError::Singular { .. })
    }
}

/// Analyzes and factors `matrix` in one step.
pub fn factorize(matrix: &ComplexSparse) -> Result<Factorization, SolveError> {
    let symbolic = Arc::new(SymbolicFactorization::analyze(matrix.pattern().clone(), 0)?);
    Factorization::new(&symbolic, matrix)
}

pub fn solve(fact: &Factorization, rhs: &[c64]) -> Result<Vec<c64>, SolveError> {
    fact.solve(rhs)
}
