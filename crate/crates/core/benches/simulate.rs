//! Parallel vs sequential throughput.
//!
//! `cargo bench` compares the rayon backend on one worker and on all workers.
//! `cargo bench --no-default-features` runs the same cases on the sequential
//! fallback, reported under the `sequential` label.

use std::hint::black_box;

use cccd::density::{DensityModel, Family};
use cccd::exact::{self, QuadratureConfig};
use cccd::montecarlo::{self, Anchors, SimulationPlan};
use cccd::parallel;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn workers() -> Vec<(String, usize)> {
    if parallel::is_parallel() {
        vec![("rayon-1".into(), 1), ("rayon-all".into(), 0)]
    } else {
        vec![("sequential".into(), 0)]
    }
}

fn simulate(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulate");
    g.sample_size(10);
    let fx = DensityModel::new(Family::Linear { a: 1.0 }).unwrap();
    for (label, threads) in workers() {
        for n in [10usize, 200] {
            let mut plan = SimulationPlan::new(fx, Anchors::Fixed(vec![0.0, 0.4, 1.0]), n, 20_000, 1);
            plan.parallelism = threads;
            g.bench_with_input(BenchmarkId::new(label.as_str(), n), &plan, |b, p| {
                b.iter(|| black_box(montecarlo::run(p).unwrap()))
            });
        }
    }
    g.finish();
}

fn quadrature(c: &mut Criterion) {
    let mut g = c.benchmark_group("quadrature");
    g.sample_size(10);
    let cfg = QuadratureConfig::default();
    let m = DensityModel::new(Family::Beta { nu1: 2.0, nu2: 3.0 }).unwrap();
    for (label, threads) in workers() {
        g.bench_with_input(BenchmarkId::new(label.as_str(), 1000), &1000usize, |b, &n| {
            b.iter(|| parallel::with_threads(threads, || black_box(exact::p_quadrature(&m, n, &cfg).unwrap())))
        });
    }
    g.finish();
}

criterion_group!(benches, simulate, quadrature);
criterion_main!(benches);
