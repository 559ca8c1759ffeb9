//! Matricized application of Kronecker-product operators.
//!
//! A coefficient vector over the tensor space (x-major: index
//! `a * ny + b`) is viewed as an `nx x ny` row-major array `V`. A
//! product `(X (x) Y) v` is then `X V Y^T`, evaluated as one banded
//! pass along rows (`Y`, which is symmetric here) and one along
//! columns (`X`), with an explicit transpose between the passes so
//! both sweeps run over contiguous rows.

use super::{BandedCholesky, BandedMatrix};
use crate::par;

/// Out-of-place transpose of an `nx x ny` row-major buffer.
pub fn transpose(src: &[f64], nx: usize, ny: usize, dst: &mut [f64]) {
    debug_assert_eq!(src.len(), nx * ny);
    debug_assert_eq!(dst.len(), nx * ny);
    for a in 0..nx {
        for b in 0..ny {
            dst[b * nx + a] = src[a * ny + b];
        }
    }
}

/// Applies `m` to every length-`ny` row of `buf` in place.
pub fn row_multiply(m: &BandedMatrix, buf: &mut [f64], ny: usize) {
    debug_assert_eq!(m.dim(), ny);
    if buf.len() < par::PAR_MIN_LEN {
        let mut scratch = vec![0.0; ny];
        for row in buf.chunks_mut(ny) {
            m.matvec(row, &mut scratch);
            row.copy_from_slice(&scratch);
        }
        return;
    }
    par::for_each_chunk_mut(buf, ny, |_, row| {
        let mut out = vec![0.0; ny];
        m.matvec(row, &mut out);
        row.copy_from_slice(&out);
    });
}

/// Solves `m x = row` for every row of `buf` in place.
pub fn row_solve(chol: &BandedCholesky, buf: &mut [f64], ny: usize) {
    debug_assert_eq!(chol.dim(), ny);
    par::for_each_chunk_mut(buf, ny, |_, row| chol.solve_in_place(row));
}

/// `(X (x) Y) v` for symmetric banded `X` (size nx) and `Y` (size ny).
pub fn kron_multiply(x: &BandedMatrix, y: &BandedMatrix, v: &[f64]) -> Vec<f64> {
    let (nx, ny) = (x.dim(), y.dim());
    assert_eq!(v.len(), nx * ny);
    let mut work = v.to_vec();
    row_multiply(y, &mut work, ny);
    let mut t = vec![0.0; nx * ny];
    transpose(&work, nx, ny, &mut t);
    row_multiply(x, &mut t, nx);
    transpose(&t, ny, nx, &mut work);
    work
}

/// `(X (x) Y)^{-1} v` given Cholesky factors of `X` and `Y`.
pub fn kron_solve(x: &BandedCholesky, y: &BandedCholesky, v: &[f64]) -> Vec<f64> {
    let (nx, ny) = (x.dim(), y.dim());
    assert_eq!(v.len(), nx * ny);
    let mut work = v.to_vec();
    row_solve(y, &mut work, ny);
    let mut t = vec![0.0; nx * ny];
    transpose(&work, nx, ny, &mut t);
    row_solve(x, &mut t, nx);
    transpose(&t, ny, nx, &mut work);
    work
}

/// Sequential variant of [`kron_solve`] retained for the benchmark
/// suite that compares the parallel and serial paths.
pub fn kron_solve_seq(x: &BandedCholesky, y: &BandedCholesky, v: &[f64]) -> Vec<f64> {
    let (nx, ny) = (x.dim(), y.dim());
    assert_eq!(v.len(), nx * ny);
    let mut work = v.to_vec();
    par::for_each_chunk_mut_seq(&mut work, ny, |_, row| y.solve_in_place(row));
    let mut t = vec![0.0; nx * ny];
    transpose(&work, nx, ny, &mut t);
    par::for_each_chunk_mut_seq(&mut t, nx, |_, row| x.solve_in_place(row));
    transpose(&t, ny, nx, &mut work);
    work
}
