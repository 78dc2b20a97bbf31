use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use tregsim::engine::{run_ensemble_with, sweep_with};
use tregsim::{Execution, ScenarioParameters};

fn scenario() -> ScenarioParameters {
    ScenarioParameters {
        horizon_years: 20.0,
        ..Default::default()
    }
}

fn ensemble(c: &mut Criterion) {
    let params = scenario();
    let mut group = c.benchmark_group("ensemble");
    group.sample_size(10);
    for n in [4u64, 16] {
        let seeds: Vec<u64> = (1..=n).collect();
        for (label, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
            group.bench_with_input(BenchmarkId::new(label, n), &seeds, |b, seeds| {
                b.iter(|| run_ensemble_with(black_box(&params), seeds, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let params = scenario();
    let grid: Vec<f64> = (1..=12).map(|i| 0.05 * i as f64).collect();
    let mut group = c.benchmark_group("sweep_m");
    group.sample_size(10);
    for (label, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        group.bench_function(label, |b| {
            b.iter(|| sweep_with(black_box(&params), "m", &grid, 1, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, ensemble, sweep);
criterion_main!(benches);
