use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use rdkit::exec::Exec;
use rdkit::harness::{evaluate_model, run_sweep, EvalOptions, SweepGrid};
use rdkit::io::{generate_synthetic, SyntheticSpec};
use rdkit::{train, Dataset, DistillConfig, DistillLoss};

fn data(n_queries: usize, seed: u64) -> Dataset {
    generate_synthetic(&SyntheticSpec {
        n_queries,
        feature_dim: 64,
        label_sparsity: 0.1,
        seed,
        ..SyntheticSpec::default()
    })
    .unwrap()
}

fn options(exec: Exec) -> EvalOptions {
    EvalOptions {
        mrr_threshold: Some(3.0),
        exec,
        ..EvalOptions::default()
    }
}

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn sweep(c: &mut Criterion) {
    let (tr, va, te) = (data(200, 1), data(50, 2), data(50, 3));
    let grid = SweepGrid {
        learning_rates: vec![0.1],
        alphas: vec![0.0, 0.5],
        temperatures: vec![1.0],
        top_ks: vec![5],
        transform_modes: vec![true, false],
        losses: vec![DistillLoss::Softmax, DistillLoss::Mse, DistillLoss::PairLog, DistillLoss::LambdaLoss],
        include_baseline: true,
    };
    let base = DistillConfig {
        batch_lists: 16,
        train_steps: 50,
        ..DistillConfig::default()
    };
    let mut g = c.benchmark_group("sweep");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run_sweep(&tr, &va, &te, &grid, &base, &options(exec)).unwrap())
        });
    }
    g.finish();
}

fn evaluate(c: &mut Criterion) {
    let ds = data(2000, 4);
    let model = train(
        &data(100, 5),
        &Dataset::new("none", 64, Vec::new()),
        &DistillConfig {
            train_steps: 20,
            batch_lists: 16,
            ..DistillConfig::default()
        },
    )
    .unwrap()
    .final_model;
    let mut g = c.benchmark_group("evaluate");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| evaluate_model(black_box(&model), &ds, &options(exec)).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, sweep, evaluate);
criterion_main!(benches);
