use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use levyx_core::rng::rng_from_seed;
use levyx_core::sim::{simulate_with, Engine, SimOptions};
use levyx_core::testfn::Bump;
use levyx_core::{build_kernel, sample_initial, track_martingale, ModelParams};

fn bench_displacement_sampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("sample_displacement");
    for n in [256usize, 4096] {
        let kernel = build_kernel(1.5, n).unwrap();
        let mut rng = rng_from_seed(1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| black_box(kernel.sample_displacement(&mut rng)));
        });
    }
    group.finish();
}

fn bench_propose(c: &mut Criterion) {
    let mut group = c.benchmark_group("propose");
    for n in [256usize, 4096] {
        let params = ModelParams::new(1.5, 0.2, 0.8, 1.0, 0.0, n).unwrap();
        let kernel = build_kernel(1.5, n).unwrap();
        let engine = Engine::new(&params, &kernel, SimOptions::default()).unwrap();
        let config = sample_initial(&|_| 0.5, n, 3).unwrap();
        let mut rng = rng_from_seed(2);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| black_box(engine.propose(&mut rng, &config)));
        });
    }
    group.finish();
}

fn bench_simulate(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate_t0.01");
    group.sample_size(20);
    for n in [128usize, 512] {
        let params = ModelParams::new(1.5, 0.2, 0.8, 1.0, 0.0, n).unwrap();
        let kernel = build_kernel(1.5, n).unwrap();
        let init = sample_initial(&|_| 0.5, n, 4).unwrap();
        let probe = simulate_with(
            &params,
            &kernel,
            &init,
            0.01,
            &[0.01],
            5,
            SimOptions::default(),
        )
        .unwrap();
        group.throughput(Throughput::Elements(
            probe.stats.pair_proposals + probe.stats.flip_proposals,
        ));
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| {
                simulate_with(
                    &params,
                    &kernel,
                    black_box(&init),
                    0.01,
                    &[0.01],
                    5,
                    SimOptions::default(),
                )
                .unwrap()
            });
        });
    }
    group.finish();
}

fn bench_martingale_replay(c: &mut Criterion) {
    let n = 128;
    let params = ModelParams::new(1.5, 0.2, 0.8, 1.0, 0.0, n).unwrap();
    let kernel = build_kernel(1.5, n).unwrap();
    let init = sample_initial(&|_| 0.5, n, 6).unwrap();
    let opts = SimOptions {
        record_events: true,
        ..Default::default()
    };
    let traj = simulate_with(&params, &kernel, &init, 0.05, &[0.025, 0.05], 7, opts).unwrap();
    let g = Bump::new(0.5, 0.3).on_grid(n);
    c.bench_function("track_martingale/128", |b| {
        b.iter(|| track_martingale(&kernel, black_box(&g), &traj).unwrap())
    });
}

criterion_group!(
    benches,
    bench_displacement_sampling,
    bench_propose,
    bench_simulate,
    bench_martingale_replay
);
criterion_main!(benches);
