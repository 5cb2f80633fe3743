//! One worker against all available workers for the data-parallel stages.
//! Build with `--no-default-features` to time the sequential fallback.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use interest3d::attributes::{extract_all, AttributeParams, NUM_ATTRIBUTES};
use interest3d::exec;
use interest3d::fixtures::synthetic_models;
use interest3d::forest::{train_forest, ForestParams, RowId, TrainingSet};
use interest3d::groundtruth::ClickDistances;

fn worker_counts() -> Vec<usize> {
    let all = std::thread::available_parallelism().map_or(1, |n| n.get());
    if all > 1 {
        vec![1, all]
    } else {
        vec![1]
    }
}

fn attributes(c: &mut Criterion) {
    let mesh = synthetic_models(1, 4, 0).remove(0).mesh;
    let params = AttributeParams::default();
    let mut g = c.benchmark_group("extract_all");
    g.sample_size(10);
    for jobs in worker_counts() {
        g.bench_with_input(BenchmarkId::from_parameter(jobs), &jobs, |b, &jobs| {
            b.iter(|| exec::with_jobs(jobs, || extract_all(&mesh, "m", &params).unwrap()))
        });
    }
    g.finish();
}

fn forest(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut data = TrainingSet::new(NUM_ATTRIBUTES);
    for i in 0..5000u32 {
        let row: Vec<f64> = (0..NUM_ATTRIBUTES)
            .map(|_| rng.random_range(0.0..1.0))
            .collect();
        let label = row[0] + row[1] > 1.6;
        data.push(
            &row,
            label,
            RowId {
                model: 0,
                vertex: i,
            },
        )
        .unwrap();
    }
    let params = ForestParams::default();
    let mut g = c.benchmark_group("train_forest");
    g.sample_size(10);
    for jobs in worker_counts() {
        g.bench_with_input(BenchmarkId::from_parameter(jobs), &jobs, |b, &jobs| {
            b.iter(|| exec::with_jobs(jobs, || train_forest(&data, &params).unwrap()))
        });
    }
    g.finish();
}

fn click_distances(c: &mut Criterion) {
    let mesh = synthetic_models(1, 4, 0).remove(0).mesh;
    let clicks: Vec<usize> = (0..60).map(|i| i * 37 % mesh.vertex_count()).collect();
    let mut g = c.benchmark_group("click_distances");
    g.sample_size(10);
    for jobs in worker_counts() {
        g.bench_with_input(BenchmarkId::from_parameter(jobs), &jobs, |b, &jobs| {
            b.iter(|| exec::with_jobs(jobs, || ClickDistances::compute(&mesh, &clicks).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, attributes, forest, click_distances);
criterion_main!(benches);
