//! Benchmark problem definitions, closed-form reference solutions,
//! relative error norms and the adaptive mesh sequence used by the
//! boundary-layer study.
//!
//! All boundary-layer exponentials are evaluated in shifted form
//! (`exp(rate * (x - 1))` style), so Peclet numbers up to 10^6 never
//! overflow; underflow to zero is harmless.

use crate::quadrature::QuadratureRule1D;
use crate::splines::TensorSpace2D;
use crate::{par, Error, Result};
use std::sync::Arc;

pub type ScalarField = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(f64, f64) -> (f64, f64) + Send + Sync>;

/// Closed-form reference solution with its gradient.
#[derive(Clone)]
pub struct ExactSolution {
    pub value: ScalarField,
    pub gradient: VectorField,
}

/// Advection-diffusion problem on an axis-aligned rectangle:
/// `beta . grad(u) - eps * lap(u) = f`, Dirichlet data `g` imposed
/// weakly on the whole boundary.
#[derive(Clone)]
pub struct ProblemDefinition {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub beta: VectorField,
    pub epsilon: f64,
    pub forcing: ScalarField,
    pub dirichlet: ScalarField,
    pub exact: Option<ExactSolution>,
}

/// Smooth product solution with boundary layers along `x = 1` and
/// `y = 1`, driven by its closed-form forcing term; homogeneous
/// Dirichlet data, `beta = (1, 1)`, `eps = 1/Pe`.
///
/// The univariate factor is `t - (e^{Pe(t-1)} - e^{-Pe})/(1 - e^{-Pe})`,
/// which vanishes at both ends of `[0, 1]`.
pub fn manufactured_problem(pe: f64) -> Result<ProblemDefinition> {
    if !(pe > 0.0) || pe > 700.0 {
        return Err(Error::PecletOverflow(pe));
    }
    let eps = 1.0 / pe;
    let denom = 1.0 - (-pe).exp();

    let phi = move |t: f64| t - ((pe * (t - 1.0)).exp() - (-pe).exp()) / denom;
    let phi_d = move |t: f64| 1.0 - pe * (pe * (t - 1.0)).exp() / denom;
    let phi_dd = move |t: f64| -pe * pe * (pe * (t - 1.0)).exp() / denom;

    let value: ScalarField = Arc::new(move |x, y| phi(x) * phi(y));
    let gradient: VectorField = Arc::new(move |x, y| (phi_d(x) * phi(y), phi(x) * phi_d(y)));
    let forcing: ScalarField = Arc::new(move |x, y| {
        phi_d(x) * phi(y) + phi(x) * phi_d(y) - eps * (phi_dd(x) * phi(y) + phi(x) * phi_dd(y))
    });

    Ok(ProblemDefinition {
        x_range: (0.0, 1.0),
        y_range: (0.0, 1.0),
        beta: Arc::new(|_, _| (1.0, 1.0)),
        epsilon: eps,
        forcing,
        dirichlet: Arc::new(|_, _| 0.0),
        exact: Some(ExactSolution { value, gradient }),
    })
}

/// Boundary-layer model problem: `beta = (1, 0)`, `f = 0`,
/// `g = sin(pi y)` on the inflow edge `x = 0` and zero elsewhere. The
/// layer of width `eps` sits at the outflow `x = 1`.
///
/// The closed-form solution `sin(pi y) (e^{r1 (x-1)} - e^{r2 (x-1)}) /
/// (e^{-r1} - e^{-r2})` with `r_{1,2} = (1 +- sqrt(1 + 4 pi^2 eps^2)) /
/// (2 eps)` satisfies the PDE; the unit tests substitute it back
/// numerically before it is trusted as the error reference.
pub fn eriksson_problem(pe: f64) -> Result<ProblemDefinition> {
    if !(pe > 0.0) {
        return Err(Error::Invalid(format!("Peclet number must be positive, got {pe}")));
    }
    let eps = 1.0 / pe;
    let pi = std::f64::consts::PI;
    let s = (1.0 + 4.0 * pi * pi * eps * eps).sqrt();
    let r1 = (1.0 + s) / (2.0 * eps);
    let r2 = (1.0 - s) / (2.0 * eps);
    let denom = (-r1).exp() - (-r2).exp();

    let w = move |x: f64| ((r1 * (x - 1.0)).exp() - (r2 * (x - 1.0)).exp()) / denom;
    let w_d = move |x: f64| (r1 * (r1 * (x - 1.0)).exp() - r2 * (r2 * (x - 1.0)).exp()) / denom;

    let value: ScalarField = Arc::new(move |x, y| (pi * y).sin() * w(x));
    let gradient: VectorField = Arc::new(move |x, y| {
        ((pi * y).sin() * w_d(x), pi * (pi * y).cos() * w(x))
    });

    Ok(ProblemDefinition {
        x_range: (0.0, 1.0),
        y_range: (0.0, 1.0),
        beta: Arc::new(|_, _| (1.0, 0.0)),
        epsilon: eps,
        forcing: Arc::new(|_, _| 0.0),
        dirichlet: Arc::new(move |x, y| if x == 0.0 { (pi * y).sin() } else { 0.0 }),
        exact: Some(ExactSolution { value, gradient }),
    })
}

/// Rotating-wind problem on `(0,1) x (-1,1)` with `beta = (-y, x)`,
/// `f = 0` and tanh-profile Dirichlet data on two segments of the
/// `x = 0` edge; no closed-form solution. With `mirror_inflow` the
/// segment profiles are also applied for negative `y` through `|y|`.
pub fn vortical_problem(pe: f64, wind_force: f64, mirror_inflow: bool) -> Result<ProblemDefinition> {
    if !(pe > 0.0) || !(wind_force > 0.0) {
        return Err(Error::Invalid(format!(
            "Peclet number and wind force must be positive, got {pe}, {wind_force}"
        )));
    }
    let eps = 1.0 / pe;
    let scale = wind_force / eps;
    let dirichlet: ScalarField = Arc::new(move |x, y| {
        if x != 0.0 {
            return 0.0;
        }
        let covered = if mirror_inflow { y.abs() <= 1.0 } else { (0.0..=1.0).contains(&y) };
        if !covered {
            return 0.0;
        }
        let t = y.abs();
        if t <= 0.5 {
            0.5 * (((t - 0.35) * scale).tanh() + 1.0)
        } else {
            0.5 * (0.65 - (t * scale).tanh() + 1.0)
        }
    });

    Ok(ProblemDefinition {
        x_range: (0.0, 1.0),
        y_range: (-1.0, 1.0),
        beta: Arc::new(|x, y| (-y, x)),
        epsilon: eps,
        forcing: Arc::new(|_, _| 0.0),
        dirichlet,
        exact: None,
    })
}

/// Relative errors of a discrete solution against a closed-form
/// reference, in percent: `100 ||u_h - u|| / ||u||` in the L2 norm and
/// in the full H1 norm (L2 part plus gradient part). Element-wise
/// Gauss quadrature with `p + 2` points per direction.
pub fn error_norms(
    coeffs: &[f64],
    space: &TensorSpace2D,
    exact: &ExactSolution,
) -> Result<(f64, f64)> {
    if coeffs.len() != space.dimension() {
        return Err(Error::DimensionMismatch {
            expected: space.dimension(),
            got: coeffs.len(),
        });
    }
    let rule_x = QuadratureRule1D::new(space.x.breakpoints(), space.x.degree() + 2)?;
    let rule_y = QuadratureRule1D::new(space.y.breakpoints(), space.y.degree() + 2)?;
    let nex = space.x.n_elements();
    let ney = space.y.n_elements();

    // per-element partial sums, reduced in element order
    let partials = par::indexed_map(nex * ney, |e| {
        let (ex, ey) = (e / ney, e % ney);
        let mut p = [0.0f64; 4]; // err_l2, exact_l2, err_grad, exact_grad
        for &(x, wx) in rule_x.element(ex) {
            for &(y, wy) in rule_y.element(ey) {
                let w = wx * wy;
                let (vh, gxh, gyh) = space
                    .eval_with_gradient(coeffs, x, y)
                    .expect("quadrature points lie inside the domain");
                let v = (exact.value)(x, y);
                let (gx, gy) = (exact.gradient)(x, y);
                p[0] += w * (vh - v) * (vh - v);
                p[1] += w * v * v;
                p[2] += w * ((gxh - gx) * (gxh - gx) + (gyh - gy) * (gyh - gy));
                p[3] += w * (gx * gx + gy * gy);
            }
        }
        p
    });
    let mut sums = [0.0f64; 4];
    for p in partials {
        for k in 0..4 {
            sums[k] += p[k];
        }
    }
    let [err_l2, exact_l2, err_grad, exact_grad] = sums;
    if exact_l2 <= 0.0 {
        return Err(Error::ZeroExactNorm);
    }
    let l2 = 100.0 * (err_l2 / exact_l2).sqrt();
    let h1 = 100.0 * ((err_l2 + err_grad) / (exact_l2 + exact_grad)).sqrt();
    Ok((l2, h1))
}

/// Mesh sequence for the boundary-layer study. Step 1 is the initial
/// mesh; each following step halves the rightmost x-interval while the
/// smallest x-interval exceeds `layer_eps`, and halves the rightmost
/// y-interval afterwards. `layer_eps = 0` therefore refines in x
/// forever.
pub fn adaptive_sequence(
    breakpoints_x: &[f64],
    breakpoints_y: &[f64],
    n_steps: usize,
    layer_eps: f64,
) -> Vec<(Vec<f64>, Vec<f64>)> {
    assert!(n_steps >= 1);
    let mut out = Vec::with_capacity(n_steps);
    let mut bx = breakpoints_x.to_vec();
    let mut by = breakpoints_y.to_vec();
    out.push((bx.clone(), by.clone()));
    for _ in 1..n_steps {
        let smallest = bx.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        if smallest > layer_eps {
            bx = crate::splines::refine_halve_last_breakpoints(&bx);
        } else {
            by = crate::splines::refine_halve_last_breakpoints(&by);
        }
        out.push((bx.clone(), by.clone()));
    }
    out
}
