//! Compares the data-parallel kernels against their sequential twins:
//! the separable inner-product solve (the linear-cost preconditioner
//! application) and the weak-form element assembly. With the
//! `parallel` feature disabled both sides collapse to the same code,
//! which keeps the suite buildable either way.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use igrm_core::assembly::{assemble_b, assemble_gramm, WeakFormConfig};
use igrm_core::kron::factorize;
use igrm_core::problems::manufactured_problem;
use igrm_core::splines::{SplineSpace1D, TensorSpace2D};
use std::hint::black_box;

fn tensor(n: usize, p: usize, c: i32) -> TensorSpace2D {
    TensorSpace2D::new(
        SplineSpace1D::uniform(0.0, 1.0, n, p, c).unwrap(),
        SplineSpace1D::uniform(0.0, 1.0, n, p, c).unwrap(),
    )
}

fn bench_separable_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("separable_solve");
    for n in [32usize, 128, 256] {
        let test = tensor(n, 2, 0);
        let gramm = assemble_gramm(&test, 1e-4).unwrap();
        let factor = factorize(&gramm).unwrap();
        let v: Vec<f64> = (0..factor.dim())
            .map(|i| ((i * 2654435761) % 1000) as f64 / 1000.0 - 0.5)
            .collect();
        group.bench_with_input(BenchmarkId::new("parallel", n), &n, |b, _| {
            b.iter(|| factor.solve(black_box(&v)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("sequential", n), &n, |b, _| {
            b.iter(|| factor.solve_seq(black_box(&v)).unwrap())
        });
    }
    group.finish();
}

fn bench_assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("weak_form_assembly");
    group.sample_size(10);
    let problem = manufactured_problem(100.0).unwrap();
    let cfg = WeakFormConfig::default();
    for n in [16usize, 32] {
        let trial = tensor(n, 2, 1);
        let test = tensor(n, 2, 0);
        group.bench_with_input(BenchmarkId::new("parallel", n), &n, |b, _| {
            b.iter(|| assemble_b(black_box(&problem), &trial, &test, &cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_separable_solve, bench_assembly);
criterion_main!(benches);
