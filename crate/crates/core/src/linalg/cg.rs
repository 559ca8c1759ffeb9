//! Preconditioned conjugate gradients on an abstract SPD operator.

use super::{axpy, dot, norm2};

#[derive(Debug, Clone, Copy)]
pub struct CgOutcome {
    pub iterations: usize,
    pub converged: bool,
    pub residual_norm: f64,
}

/// Solves `A x = b` for a symmetric positive definite operator given as
/// a closure. Convergence is declared when the residual norm drops
/// below `tol * max(||b||, tiny)`, a hybrid that cannot stall on a zero
/// right-hand side. `x` carries the initial guess and the solution.
pub fn pcg<A, P>(
    apply: A,
    precondition: Option<P>,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> CgOutcome
where
    A: Fn(&[f64]) -> Vec<f64>,
    P: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    assert_eq!(x.len(), n);
    let threshold = tol * norm2(b).max(1e-300);

    let ax = apply(x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut rnorm = norm2(&r);
    if rnorm <= threshold {
        return CgOutcome {
            iterations: 0,
            converged: true,
            residual_norm: rnorm,
        };
    }

    let mut z = match &precondition {
        Some(m) => m(&r),
        None => r.clone(),
    };
    let mut p = z.clone();
    let mut rz = dot(&r, &z);

    for it in 1..=max_iter {
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            // loss of positive definiteness in finite precision; stop
            // with what we have rather than diverge
            return CgOutcome {
                iterations: it - 1,
                converged: false,
                residual_norm: rnorm,
            };
        }
        let alpha = rz / pap;
        axpy(alpha, &p, x);
        axpy(-alpha, &ap, &mut r);
        rnorm = norm2(&r);
        if rnorm <= threshold {
            return CgOutcome {
                iterations: it,
                converged: true,
                residual_norm: rnorm,
            };
        }
        z = match &precondition {
            Some(m) => m(&r),
            None => r.clone(),
        };
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    CgOutcome {
        iterations: max_iter,
        converged: false,
        residual_norm: rnorm,
    }
}
