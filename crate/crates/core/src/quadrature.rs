//! Gauss–Legendre quadrature on breakpoint intervals.

use crate::{Error, Result};

/// Nodes and weights of the `q`-point Gauss–Legendre rule on `[-1, 1]`,
/// computed by Newton iteration on the Legendre recurrence. Exact for
/// polynomials of degree `2q - 1`.
pub fn gauss_legendre(q: usize) -> Vec<(f64, f64)> {
    assert!(q >= 1, "quadrature order must be at least 1");
    let mut rule = vec![(0.0, 0.0); q];
    let m = q.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=q {
                let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = pk;
            }
            // derivative from the recurrence; x = +-1 never arises for interior roots
            dp = q as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule[i] = (-x, w);
        rule[q - 1 - i] = (x, w);
    }
    if q % 2 == 1 {
        // middle node is exactly zero
        rule[q / 2].0 = 0.0;
    }
    rule
}

/// Per-interval quadrature points and weights over a breakpoint
/// sequence, mapped from the reference rule.
#[derive(Debug, Clone)]
pub struct QuadratureRule1D {
    elements: Vec<Vec<(f64, f64)>>,
}

impl QuadratureRule1D {
    /// Builds the `q`-point rule on every interval of `breakpoints`.
    pub fn new(breakpoints: &[f64], q: usize) -> Result<Self> {
        if breakpoints.len() < 2 || breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidBreakpoints);
        }
        let reference = gauss_legendre(q);
        let elements = breakpoints
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0], w[1]);
                let half = 0.5 * (b - a);
                let mid = 0.5 * (a + b);
                reference
                    .iter()
                    .map(|&(t, wt)| (mid + half * t, half * wt))
                    .collect()
            })
            .collect();
        Ok(Self { elements })
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    /// Points and weights on interval `e`.
    pub fn element(&self, e: usize) -> &[(f64, f64)] {
        &self.elements[e]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[(f64, f64)]> {
        self.elements.iter().map(|v| v.as_slice())
    }
}
