//! Thin indirection over rayon so the whole crate builds with or
//! without the `parallel` feature. Reductions always happen in index
//! order, so results are bitwise identical for any thread count.

/// Maps `f` over `0..n`, preserving index order in the output. Meant
/// for coarse work items (elements, matrix columns); tiny batches run
/// inline.
#[cfg(feature = "parallel")]
pub fn indexed_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if n < 4 {
        return (0..n).map(f).collect();
    }
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn indexed_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    (0..n).map(f).collect()
}

/// Sequential twin of [`indexed_map`], kept available for benchmarks
/// that compare the two paths.
pub fn indexed_map_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Below this many scalars of work a kernel runs inline; thread
/// dispatch would cost more than the sweep itself.
pub const PAR_MIN_LEN: usize = 16 * 1024;

/// Applies `f` to consecutive `chunk`-sized slices of `buf` (the last
/// chunk may be shorter). Chunks are disjoint, so the parallel and
/// sequential paths write identical bytes; small buffers always run
/// inline.
#[cfg(feature = "parallel")]
pub fn for_each_chunk_mut<F>(buf: &mut [f64], chunk: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    if buf.len() < PAR_MIN_LEN {
        for (i, c) in buf.chunks_mut(chunk).enumerate() {
            f(i, c);
        }
        return;
    }
    use rayon::prelude::*;
    buf.par_chunks_mut(chunk)
        .enumerate()
        .for_each(|(i, c)| f(i, c));
}

#[cfg(not(feature = "parallel"))]
pub fn for_each_chunk_mut<F>(buf: &mut [f64], chunk: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    for (i, c) in buf.chunks_mut(chunk).enumerate() {
        f(i, c);
    }
}

/// Sequential twin of [`for_each_chunk_mut`].
pub fn for_each_chunk_mut_seq<F>(buf: &mut [f64], chunk: usize, f: F)
where
    F: Fn(usize, &mut [f64]),
{
    for (i, c) in buf.chunks_mut(chunk).enumerate() {
        f(i, c);
    }
}
