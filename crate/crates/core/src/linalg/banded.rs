//! Banded matrix storage and direct factorizations.

use crate::{Error, Result};

/// Square band matrix with half-bandwidth `w`: entry `(i, j)` may be
/// nonzero only for `|i - j| <= w`. Rows are stored contiguously with
/// `2w + 1` slots each.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    w: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, w: usize) -> Self {
        Self {
            n,
            w,
            data: vec![0.0; n * (2 * w + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn half_bandwidth(&self) -> usize {
        self.w
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        i * (2 * self.w + 1) + (j + self.w - i)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i.abs_diff(j) > self.w {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i.abs_diff(j) <= self.w, "entry outside the band");
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    /// `self + alpha * other`; both operands must share `n` and `w`.
    pub fn add_scaled(&self, alpha: f64, other: &BandedMatrix) -> BandedMatrix {
        assert_eq!(self.n, other.n);
        assert_eq!(self.w, other.w);
        let mut out = self.clone();
        for (o, v) in out.data.iter_mut().zip(&other.data) {
            *o += alpha * v;
        }
        out
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let lo = i.saturating_sub(self.w);
            let hi = (i + self.w).min(self.n - 1);
            let mut acc = 0.0;
            let row = &self.data[i * (2 * self.w + 1)..(i + 1) * (2 * self.w + 1)];
            for j in lo..=hi {
                acc += row[j + self.w - i] * x[j];
            }
            y[i] = acc;
        }
    }

    pub fn matvec_alloc(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Largest symmetry defect `|a_ij - a_ji|`, for assembly checks.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in i + 1..=(i + self.w).min(self.n - 1) {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }
}

/// Cholesky factorization of a symmetric positive definite band
/// matrix; the factor keeps the bandwidth of the input. Breakdown is a
/// hard error, a non-SPD operand here always indicates an assembly bug.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    w: usize,
    // lower factor, rows of w + 1 slots: entry (i, j) for j in [i-w, i]
    l: Vec<f64>,
}

impl BandedCholesky {
    pub fn factor(a: &BandedMatrix) -> Result<Self> {
        let (n, w) = (a.dim(), a.half_bandwidth());
        let stride = w + 1;
        let mut l = vec![0.0; n * stride];
        let idx = |i: usize, j: usize| i * stride + (j + w - i);
        for j in 0..n {
            let mut diag = a.get(j, j);
            for k in j.saturating_sub(w)..j {
                let v = l[idx(j, k)];
                diag -= v * v;
            }
            if diag <= 0.0 || !diag.is_finite() {
                return Err(Error::NotPositiveDefinite { row: j, pivot: diag });
            }
            let dsqrt = diag.sqrt();
            l[idx(j, j)] = dsqrt;
            let hi = (j + w).min(n - 1);
            for i in j + 1..=hi {
                let mut s = a.get(i, j);
                for k in i.saturating_sub(w)..j {
                    s -= l[idx(i, k)] * l[idx(j, k)];
                }
                l[idx(i, j)] = s / dsqrt;
            }
        }
        Ok(Self { n, w, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let (n, w) = (self.n, self.w);
        let stride = w + 1;
        let idx = |i: usize, j: usize| i * stride + (j + w - i);
        // L y = b
        for i in 0..n {
            let mut s = b[i];
            for k in i.saturating_sub(w)..i {
                s -= self.l[idx(i, k)] * b[k];
            }
            b[i] = s / self.l[idx(i, i)];
        }
        // L^T x = y
        for i in (0..n).rev() {
            let mut s = b[i];
            let hi = (i + w).min(n - 1);
            for k in i + 1..=hi {
                s -= self.l[idx(k, i)] * b[k];
            }
            b[i] = s / self.l[idx(i, i)];
        }
    }
}

/// LU factorization with partial pivoting of a band matrix. Row
/// interchanges widen the upper bandwidth from `w` to `2w`, which the
/// storage accounts for up front.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    kuw: usize, // working upper bandwidth = 2 * kl
    stride: usize,
    data: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandedLu {
    pub fn factor(a: &BandedMatrix) -> Result<Self> {
        let n = a.dim();
        let kl = a.half_bandwidth();
        let kuw = 2 * kl;
        let stride = kl + kuw + 1; // columns [i - kl, i + kuw] per row
        let mut data = vec![0.0; n * stride];
        let col0 = |i: usize| i as i64 - kl as i64;
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + kl).min(n - 1) {
                data[i * stride + (j as i64 - col0(i)) as usize] = a.get(i, j);
            }
        }
        let mut pivots = vec![0usize; n];
        for k in 0..n {
            // pivot search in column k over rows k..=k+kl
            let hi = (k + kl).min(n - 1);
            let mut piv = k;
            let mut best = 0.0;
            for i in k..=hi {
                let v = data[i * stride + (k as i64 - col0(i)) as usize].abs();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if best == 0.0 {
                return Err(Error::Singular(format!("zero pivot column {k}")));
            }
            pivots[k] = piv;
            if piv != k {
                // swap the parts of rows k and piv in columns k..=k+kuw
                for j in k..=(k + kuw).min(n - 1) {
                    let ik = k * stride + (j as i64 - col0(k)) as usize;
                    let ip = piv * stride + (j as i64 - col0(piv)) as usize;
                    data.swap(ik, ip);
                }
            }
            let pivot = data[k * stride + (k as i64 - col0(k)) as usize];
            for i in k + 1..=hi {
                let li = i * stride + (k as i64 - col0(i)) as usize;
                let m = data[li] / pivot;
                data[li] = m;
                if m != 0.0 {
                    for j in k + 1..=(k + kuw).min(n - 1) {
                        let ui = k * stride + (j as i64 - col0(k)) as usize;
                        let ti = i * stride + (j as i64 - col0(i)) as usize;
                        data[ti] -= m * data[ui];
                    }
                }
            }
        }
        Ok(Self {
            n,
            kl,
            kuw,
            stride,
            data,
            pivots,
        })
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let col0 = |i: usize| i as i64 - self.kl as i64;
        for k in 0..self.n {
            b.swap(k, self.pivots[k]);
            let hi = (k + self.kl).min(self.n - 1);
            for i in k + 1..=hi {
                let m = self.data[i * self.stride + (k as i64 - col0(i)) as usize];
                b[i] -= m * b[k];
            }
        }
        for i in (0..self.n).rev() {
            let mut s = b[i];
            let hi = (i + self.kuw).min(self.n - 1);
            for j in i + 1..=hi {
                s -= self.data[i * self.stride + (j as i64 - col0(i)) as usize] * b[j];
            }
            b[i] = s / self.data[i * self.stride + (i as i64 - col0(i)) as usize];
        }
    }
}
