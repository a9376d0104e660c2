use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;
use ringmag::linalg::LinearOperator;
use ringmag::ringsolver::{solve_two_ring, PlaneGridSpec};
use ringmag::{
    build_bonds, compare_with_spin_model, lowest_eigenpairs, Boundary, EdOptions, RingGeometry, SpinOperatorMatrix,
};
use ringmag_bench::{ladder, reference_couplings};

fn matvec(c: &mut Criterion) {
    let mut g = c.benchmark_group("matvec");
    for n in [12, 14] {
        let dim = 1usize << n;
        // pi/2 gives a real matrix, 0.48 pi a complex one
        let real = SpinOperatorMatrix::new(&ladder(n, 0.5)).unwrap();
        let x = vec![1.0 / (dim as f64).sqrt(); dim];
        let mut y = vec![0.0; dim];
        g.bench_with_input(BenchmarkId::new("real", n), &n, |b, _| {
            b.iter(|| LinearOperator::<f64>::apply(&real, black_box(&x), &mut y))
        });
        let cplx = SpinOperatorMatrix::new(&ladder(n, 0.48)).unwrap();
        let x = vec![Complex64::new(1.0 / (dim as f64).sqrt(), 0.0); dim];
        let mut y = vec![Complex64::default(); dim];
        g.bench_with_input(BenchmarkId::new("complex", n), &n, |b, _| {
            b.iter(|| LinearOperator::<Complex64>::apply(&cplx, black_box(&x), &mut y))
        });
    }
    g.finish();
}

fn lanczos(c: &mut Criterion) {
    let mut g = c.benchmark_group("lowest_eigenpairs");
    g.sample_size(10);
    for n in [10, 12] {
        let m = ladder(n, 0.48);
        g.bench_with_input(BenchmarkId::from_parameter(n), &m, |b, m| {
            b.iter(|| lowest_eigenpairs(black_box(m), &EdOptions::default()).unwrap())
        });
    }
    g.finish();
}

fn two_ring(c: &mut Criterion) {
    let mut g = c.benchmark_group("two_ring");
    g.sample_size(10);
    let spec = PlaneGridSpec {
        spacing: 0.2,
        ..PlaneGridSpec::default()
    };
    g.bench_function("coarse_d2", |b| {
        b.iter(|| solve_two_ring(2.5, black_box(2.0), &spec).unwrap())
    });
    g.finish();
}

fn oracle(c: &mut Criterion) {
    let geom = RingGeometry::two_site(2.5, 2.0, 0.48, 1, 4, Boundary::Periodic);
    let table = build_bonds(&geom).unwrap();
    let cs = reference_couplings();
    c.bench_function("oracle_n4", |b| {
        b.iter(|| compare_with_spin_model(black_box(&table), &cs).unwrap())
    });
}

criterion_group!(benches, matvec, lanczos, two_ring, oracle);
criterion_main!(benches);
