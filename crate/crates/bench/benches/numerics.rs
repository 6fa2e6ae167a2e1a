use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use levyx_core::testfn::Bump;
use levyx_core::{
    build_kernel, build_operator, quadrature_regional, solve_evolution, solve_stationary,
    OperatorMode, PdeSpec, StationaryMode,
};

fn bench_kernel(c: &mut Criterion) {
    let mut group = c.benchmark_group("build_kernel");
    for n in [256usize, 4096] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| build_kernel(1.5, black_box(n)).unwrap())
        });
    }
    group.finish();
}

fn bench_operator(c: &mut Criterion) {
    let mut group = c.benchmark_group("operator_apply");
    for n in [256usize, 1024, 8192] {
        let op = build_operator(n, 1.5, OperatorMode::Regional).unwrap();
        let v = Bump::new(0.5, 0.3).on_grid(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| op.apply(black_box(&v)).unwrap())
        });
    }
    group.finish();
}

fn bench_solvers(c: &mut Criterion) {
    let mut group = c.benchmark_group("solvers");
    group.sample_size(10);
    for n in [256usize, 1024] {
        group.bench_with_input(BenchmarkId::new("stationary", n), &n, |b, &n| {
            b.iter(|| solve_stationary(1.5, 0.2, 0.8, 1.0, n, StationaryMode::Auto).unwrap())
        });
        let spec = PdeSpec::new(1.5, 0.2, 0.8, 1.0, n, 1e-3, 0.05, |_| 0.5);
        group.bench_with_input(BenchmarkId::new("evolution_50_steps", n), &n, |b, _| {
            b.iter(|| solve_evolution(black_box(&spec)).unwrap())
        });
    }
    group.finish();
}

fn bench_quadrature(c: &mut Criterion) {
    let bump = Bump::new(0.5, 0.3);
    let mut group = c.benchmark_group("quadrature_regional");
    for gamma in [1.2, 1.5, 1.8] {
        group.bench_with_input(BenchmarkId::from_parameter(gamma), &gamma, |b, &g| {
            b.iter(|| quadrature_regional(&|u| bump.eval(u), black_box(0.37), g, 1e-8).unwrap())
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_kernel,
    bench_operator,
    bench_solvers,
    bench_quadrature
);
criterion_main!(benches);
