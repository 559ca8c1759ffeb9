//! Matrix storage and solvers used by the assembly and solver modules:
//! banded symmetric/general matrices with Cholesky and partially
//! pivoted LU factorizations, compressed sparse rows for the
//! rectangular weak-form operator, preconditioned conjugate gradients,
//! and a blocked dense Cholesky for the direct Schur-complement path.

mod banded;
mod cg;
mod csr;
mod dense;
pub mod tensor;

pub use banded::{BandedCholesky, BandedLu, BandedMatrix};
pub use cg::{pcg, CgOutcome};
pub use csr::CsrMatrix;
pub use dense::DenseCholesky;

/// Euclidean norm.
pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Dot product, accumulated in index order for reproducibility.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y += alpha * x`.
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
