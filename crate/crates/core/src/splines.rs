//! One-dimensional B-spline spaces on open knot vectors and their
//! tensor products.
//!
//! A space is described by a polynomial degree `p`, a uniform
//! continuity `c` at interior breakpoints (`-1 <= c <= p-1`) and a
//! strictly increasing breakpoint sequence. The derived knot vector is
//! clamped: end knots carry multiplicity `p+1`, interior breakpoints
//! multiplicity `p-c`. Evaluation at the right end of the domain
//! returns the limit from the left, so boundary integrals at the far
//! edge are well defined.

use crate::quadrature::QuadratureRule1D;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SplineSpace1D {
    degree: usize,
    continuity: i32,
    breakpoints: Vec<f64>,
    knots: Vec<f64>,
}

/// Builds a spline space from breakpoints, degree and uniform interior
/// continuity. Fails on non-monotone breakpoints or `c` outside
/// `[-1, p-1]`.
pub fn make_space(breakpoints: &[f64], degree: usize, continuity: i32) -> Result<SplineSpace1D> {
    SplineSpace1D::new(breakpoints, degree, continuity)
}

impl SplineSpace1D {
    pub fn new(breakpoints: &[f64], degree: usize, continuity: i32) -> Result<Self> {
        if degree < 1 {
            return Err(Error::InvalidDegree);
        }
        if breakpoints.len() < 2 || breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidBreakpoints);
        }
        if continuity < -1 || continuity > degree as i32 - 1 {
            return Err(Error::InvalidContinuity {
                degree,
                continuity,
            });
        }
        let p = degree;
        let interior_mult = (p as i32 - continuity) as usize;
        let mut knots = Vec::with_capacity(breakpoints.len() * interior_mult + 2 * (p + 1));
        knots.extend(std::iter::repeat(breakpoints[0]).take(p + 1));
        for &b in &breakpoints[1..breakpoints.len() - 1] {
            knots.extend(std::iter::repeat(b).take(interior_mult));
        }
        knots.extend(std::iter::repeat(*breakpoints.last().unwrap()).take(p + 1));
        Ok(Self {
            degree,
            continuity,
            breakpoints: breakpoints.to_vec(),
            knots,
        })
    }

    /// Uniform mesh with `n` elements on `[a, b]`.
    pub fn uniform(a: f64, b: f64, n: usize, degree: usize, continuity: i32) -> Result<Self> {
        Self::new(&uniform_breakpoints(a, b, n), degree, continuity)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn continuity(&self) -> i32 {
        self.continuity
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn n_elements(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.breakpoints[0], *self.breakpoints.last().unwrap())
    }

    /// Number of basis functions:
    /// `n_elem * (p - c) + c + 1 = len(knots) - p - 1`.
    pub fn dimension(&self) -> usize {
        let n = self.n_elements() as i32;
        (n * (self.degree as i32 - self.continuity) + self.continuity + 1) as usize
    }

    /// Length of the smallest breakpoint interval.
    pub fn min_element_size(&self) -> f64 {
        self.breakpoints
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Length of the largest breakpoint interval.
    pub fn max_element_size(&self) -> f64 {
        self.breakpoints
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Index of the knot span containing `x`; the right domain endpoint
    /// maps to the last span (limit from the left).
    fn find_span(&self, x: f64) -> Result<usize> {
        let (a, b) = self.domain();
        if !(x >= a && x <= b) {
            return Err(Error::OutOfDomain(x));
        }
        let dim = self.dimension();
        if x >= self.knots[dim] {
            return Ok(dim - 1);
        }
        // largest i with knots[i] <= x; repeated knots collapse onto the
        // span whose right end exceeds x
        let mut lo = self.degree;
        let mut hi = dim; // knots[hi] > x holds here
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.knots[mid] <= x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }

    /// First global index of the `p + 1` basis functions active on
    /// breakpoint interval `e`.
    pub fn element_first_index(&self, e: usize) -> usize {
        // the left breakpoint of element e sits at knot position
        // p + e * (p - c); subtracting p gives the first active function
        e * (self.degree as i32 - self.continuity) as usize
    }

    /// Values and derivatives of the `p + 1` basis functions that may be
    /// nonzero at `x`. Returns `(first_index, ders)` where
    /// `ders[k][j]` is the k-th derivative of function `first_index + j`.
    /// Functions outside this window vanish identically at `x`.
    pub fn eval_basis(&self, x: f64, max_deriv: usize) -> Result<(usize, Vec<Vec<f64>>)> {
        let span = self.find_span(x)?;
        let p = self.degree;
        let nd = max_deriv.min(p);
        let knots = &self.knots;

        // triangular table of basis values and knot differences
        let mut ndu = vec![vec![0.0f64; p + 1]; p + 1];
        let mut left = vec![0.0f64; p + 1];
        let mut right = vec![0.0f64; p + 1];
        ndu[0][0] = 1.0;
        for j in 1..=p {
            left[j] = x - knots[span + 1 - j];
            right[j] = knots[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }

        let mut ders = vec![vec![0.0f64; p + 1]; max_deriv + 1];
        for j in 0..=p {
            ders[0][j] = ndu[j][p];
        }

        // derivative triangles (The NURBS Book, algorithm A2.3)
        let mut a = vec![vec![0.0f64; p + 1]; 2];
        for r in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = 1.0;
            for k in 1..=nd {
                let mut d = 0.0;
                let rk = r as i64 - k as i64;
                let pk = (p - k) as i64;
                if r >= k {
                    a[s2][0] = a[s1][0] / ndu[(pk + 1) as usize][rk as usize];
                    d = a[s2][0] * ndu[rk as usize][pk as usize];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if r as i64 - 1 <= pk { k - 1 } else { p - r };
                for j in j1..=j2 {
                    a[s2][j] =
                        (a[s1][j] - a[s1][j - 1]) / ndu[(pk + 1) as usize][(rk + j as i64) as usize];
                    d += a[s2][j] * ndu[(rk + j as i64) as usize][pk as usize];
                }
                if r as i64 <= pk {
                    a[s2][k] = -a[s1][k - 1] / ndu[(pk + 1) as usize][r];
                    d += a[s2][k] * ndu[r][pk as usize];
                }
                ders[k][r] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }

        let mut factor = p as f64;
        for k in 1..=nd {
            for j in 0..=p {
                ders[k][j] *= factor;
            }
            factor *= (p - k) as f64;
        }
        Ok((span - p, ders))
    }

    /// New space with the last breakpoint interval split at its
    /// midpoint; degree and continuity are unchanged.
    pub fn refine_halve_last(&self) -> SplineSpace1D {
        let refined = refine_halve_last_breakpoints(&self.breakpoints);
        SplineSpace1D::new(&refined, self.degree, self.continuity)
            .expect("refinement preserves breakpoint monotonicity")
    }
}

/// Splits the rightmost interval of a breakpoint sequence at its
/// midpoint.
pub fn refine_halve_last_breakpoints(breakpoints: &[f64]) -> Vec<f64> {
    assert!(breakpoints.len() >= 2, "need at least one interval");
    let n = breakpoints.len();
    let mid = 0.5 * (breakpoints[n - 2] + breakpoints[n - 1]);
    let mut out = breakpoints.to_vec();
    out.insert(n - 1, mid);
    out
}

/// `n + 1` equally spaced breakpoints on `[a, b]`.
pub fn uniform_breakpoints(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 1 && b > a);
    (0..=n)
        .map(|i| a + (b - a) * i as f64 / n as f64)
        .collect()
}

/// Quadrature rule shared by a trial/test pair living on the same
/// breakpoints: `max(p_trial, p_test) + 1` Gauss points per interval,
/// which is exact for every product integrand of the pair's mass
/// matrix.
pub fn gauss_rule(trial: &SplineSpace1D, test: &SplineSpace1D) -> Result<QuadratureRule1D> {
    if trial.breakpoints() != test.breakpoints() {
        return Err(Error::BreakpointMismatch);
    }
    let q = trial.degree().max(test.degree()) + 1;
    QuadratureRule1D::new(trial.breakpoints(), q)
}

/// Tensor product of two 1D spaces. Global index of the function
/// `(a, b)` is `a * dim_y + b` (x-major); every module in the crate
/// relies on this single convention.
#[derive(Debug, Clone)]
pub struct TensorSpace2D {
    pub x: SplineSpace1D,
    pub y: SplineSpace1D,
}

impl TensorSpace2D {
    pub fn new(x: SplineSpace1D, y: SplineSpace1D) -> Self {
        Self { x, y }
    }

    pub fn dimension(&self) -> usize {
        self.x.dimension() * self.y.dimension()
    }

    pub fn index(&self, a: usize, b: usize) -> usize {
        a * self.y.dimension() + b
    }

    /// Largest element diameter over the tensor mesh.
    pub fn max_element_diameter(&self) -> f64 {
        let hx = self.x.max_element_size();
        let hy = self.y.max_element_size();
        (hx * hx + hy * hy).sqrt()
    }

    /// Point value of the spline field with coefficient vector `coeffs`.
    pub fn eval(&self, coeffs: &[f64], x: f64, y: f64) -> Result<f64> {
        let (fx, bx) = self.x.eval_basis(x, 0)?;
        let (fy, by) = self.y.eval_basis(y, 0)?;
        let dy = self.y.dimension();
        let mut value = 0.0;
        for (i, vx) in bx[0].iter().enumerate() {
            for (j, vy) in by[0].iter().enumerate() {
                value += coeffs[(fx + i) * dy + (fy + j)] * vx * vy;
            }
        }
        Ok(value)
    }

    /// Point value and gradient of the spline field.
    pub fn eval_with_gradient(&self, coeffs: &[f64], x: f64, y: f64) -> Result<(f64, f64, f64)> {
        let (fx, bx) = self.x.eval_basis(x, 1)?;
        let (fy, by) = self.y.eval_basis(y, 1)?;
        let dy = self.y.dimension();
        let (mut v, mut gx, mut gy) = (0.0, 0.0, 0.0);
        for i in 0..bx[0].len() {
            for j in 0..by[0].len() {
                let c = coeffs[(fx + i) * dy + (fy + j)];
                v += c * bx[0][i] * by[0][j];
                gx += c * bx[1][i] * by[0][j];
                gy += c * bx[0][i] * by[1][j];
            }
        }
        Ok((v, gx, gy))
    }
}
