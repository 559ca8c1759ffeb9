//! Compressed sparse row storage for the rectangular weak-form
//! operator and the SUPG system.

use crate::par;

#[derive(Debug, Clone)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from unordered `(row, col, value)` triplets;
    /// duplicates are summed. The sort fixes the floating-point
    /// accumulation order, so the result does not depend on how the
    /// triplets were generated.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx: Vec<usize> = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            debug_assert!(r < rows && c < cols);
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `y = A x`, rows computed independently (parallel for large
    /// operators, inline otherwise).
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(y.len(), self.rows);
        const ROW_BLOCK: usize = 512;
        par::for_each_chunk_mut(y, ROW_BLOCK, |blk, chunk| {
            let base = blk * ROW_BLOCK;
            for (k, yi) in chunk.iter_mut().enumerate() {
                let row = base + k;
                let mut acc = 0.0;
                for t in self.row_ptr[row]..self.row_ptr[row + 1] {
                    acc += self.values[t] * x[self.col_idx[t]];
                }
                *yi = acc;
            }
        });
    }

    pub fn matvec_alloc(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        self.matvec(x, &mut y);
        y
    }

    /// Explicit transpose; the solver keeps both orientations so that
    /// transposed products are plain row-parallel matvecs.
    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.cols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for i in 0..self.cols {
            counts[i + 1] += counts[i];
        }
        let row_ptr = counts.clone();
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        let mut next = counts;
        for r in 0..self.rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k];
                let slot = next[c];
                next[c] += 1;
                col_idx[slot] = r;
                values[slot] = self.values[k];
            }
        }
        CsrMatrix {
            rows: self.cols,
            cols: self.rows,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Per-column sums of squared entries, `diag(A^T A)`.
    pub fn column_squared_norms(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.cols];
        for (k, &c) in self.col_idx.iter().enumerate() {
            d[c] += self.values[k] * self.values[k];
        }
        d
    }

    /// Largest `|i - j|` over stored entries (band width of the
    /// sparsity pattern).
    pub fn max_index_distance(&self) -> usize {
        let mut w = 0usize;
        for r in 0..self.rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                w = w.max(r.abs_diff(self.col_idx[k]));
            }
        }
        w
    }

    pub fn row_entries(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.col_idx[k], self.values[k]))
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for (c, v) in self.row_entries(r) {
                m[(r, c)] += v;
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn triplets_merge_duplicates() {
        let a = CsrMatrix::from_triplets(
            2,
            3,
            vec![(1, 2, 1.0), (0, 0, 2.0), (1, 2, 0.5), (0, 1, -1.0)],
        );
        assert_eq!(a.nnz(), 3);
        let d = a.to_dense();
        assert_abs_diff_eq!(d[(0, 0)], 2.0);
        assert_abs_diff_eq!(d[(0, 1)], -1.0);
        assert_abs_diff_eq!(d[(1, 2)], 1.5);
    }

    #[test]
    fn matvec_and_transpose_match_dense() {
        let a = CsrMatrix::from_triplets(
            3,
            2,
            vec![(0, 0, 1.0), (0, 1, 2.0), (1, 1, 3.0), (2, 0, -1.0)],
        );
        let x = vec![0.5, -2.0];
        let y = a.matvec_alloc(&x);
        assert_abs_diff_eq!(y[0], 0.5 - 4.0);
        assert_abs_diff_eq!(y[1], -6.0);
        assert_abs_diff_eq!(y[2], -0.5);

        let at = a.transpose();
        let z = vec![1.0, 2.0, 3.0];
        let w = at.matvec_alloc(&z);
        let dense_t = a.to_dense().transpose();
        let wd = dense_t * nalgebra::DVector::from_column_slice(&z);
        for i in 0..2 {
            assert_abs_diff_eq!(w[i], wd[i], epsilon = 1e-14);
        }
    }

    #[test]
    fn column_norms() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 3.0), (1, 0, 4.0), (1, 1, 2.0)]);
        let d = a.column_squared_norms();
        assert_abs_diff_eq!(d[0], 25.0);
        assert_abs_diff_eq!(d[1], 4.0);
    }
}
