//! Dense and sparse linear algebra used by the discretization.

mod dense;
mod solver;
mod sparse;

pub use dense::{
    solve_dense, spectral_radius, symmetric_eigenvalues, Cholesky, DenseMatrix, LuFactors,
    QrFactors,
};
pub use solver::{
    solve_sparse, BlockPartition, PreconditionerKind, SolveMethod, SolveStats, SolverOptions,
};
pub use sparse::SparseMatrix;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("singular matrix (pivot {pivot})")]
    Singular { pivot: usize },
    #[error("matrix is not positive definite (pivot {index})")]
    NotPositiveDefinite { index: usize },
    #[error("matrix is not symmetric (asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("iterative solver did not converge after {iterations} iterations (relative residual {relative_residual:e})")]
    NotConverged {
        iterations: usize,
        relative_residual: f64,
    },
}
