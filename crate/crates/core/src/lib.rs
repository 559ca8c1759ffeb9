//! Stabilized solver for stationary advection-dominated diffusion on
//! tensor-product B-spline spaces.
//!
//! The discretization minimizes the weak-form residual over a rich test
//! space while the solution lives in a smaller, smoother trial space.
//! The resulting saddle-point system is solved by an outer correction
//! iteration preconditioned with a separable (Kronecker-product)
//! approximation of the test-space inner product, so every
//! preconditioner application costs a pair of one-dimensional banded
//! sweeps. An SUPG-stabilized Galerkin solver on the same spaces serves
//! as the comparison baseline.
//!
//! Module map:
//! - [`splines`]: 1D B-spline spaces, basis/derivative evaluation,
//!   Gauss rules, knot refinement.
//! - [`assembly`]: 1D mass/stiffness matrices, the rectangular weak-form
//!   operator with weak (Nitsche-type) boundary conditions, and the
//!   weighted-H1 test-space inner product.
//! - [`kron`]: separable factorization of the inner product and its
//!   linear-cost solve, plus spectral diagnostics of the splitting.
//! - [`igrm`]: the saddle-point correction iteration with CG (or a
//!   direct factorization) on the Schur complement.
//! - [`supg`]: the SUPG baseline with a banded direct solve.
//! - [`problems`]: benchmark problem definitions, exact solutions,
//!   error norms and the adaptive mesh sequence.

pub mod assembly;
pub mod igrm;
pub mod kron;
pub mod linalg;
pub mod par;
pub mod problems;
pub mod quadrature;
pub mod splines;
pub mod supg;

use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("breakpoints must be strictly increasing with at least two entries")]
    InvalidBreakpoints,
    #[error("continuity {continuity} out of range for degree {degree}")]
    InvalidContinuity { degree: usize, continuity: i32 },
    #[error("degree must be at least 1")]
    InvalidDegree,
    #[error("point {0} lies outside the domain")]
    OutOfDomain(f64),
    #[error("spaces live on different breakpoints")]
    BreakpointMismatch,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not positive definite (pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("singular system: {0}")]
    Singular(String),
    #[error("inner-product weight must be positive, got {0}")]
    NonPositiveEta(f64),
    #[error("Peclet number {0} overflows the closed-form solution")]
    PecletOverflow(f64),
    #[error("system too large for a dense reference solve ({0} unknowns)")]
    TooLargeForDense(usize),
    #[error("spectral diagnostic limited to 1D dimensions <= {max}, got {got}")]
    SpectralGuard { max: usize, got: usize },
    #[error("exact solution has zero norm")]
    ZeroExactNorm,
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
