//! Sequential vs rayon replication throughput on a small gap grid.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kcell::experiments::{estimate_gap_grid, RunPolicy};
use kcell::geom::ConvexBody;

fn replications(c: &mut Criterion) {
    let ball = ConvexBody::unit_ball(2);
    let grid = [16.0, 64.0, 256.0];
    let threads = std::thread::available_parallelism().map_or(4, |n| n.get()).max(2);
    let mut group = c.benchmark_group("gap_grid_64_reps");
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("sequential", 1), |b| {
        b.iter(|| black_box(estimate_gap_grid(&ball, &grid, 64, &RunPolicy::new(1)).unwrap()))
    });
    if kcell::parallel::parallel_enabled() {
        group.bench_function(BenchmarkId::new("rayon", threads), |b| {
            let policy = RunPolicy::new(1).with_workers(threads);
            b.iter(|| black_box(estimate_gap_grid(&ball, &grid, 64, &policy).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, replications);
criterion_main!(benches);
