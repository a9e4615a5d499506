use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use pes_core::harness::{parse_config, run_experiment, run_single, ExperimentConfig};
use pes_core::ExecMode;

fn config(agent: serde_json::Value, horizon: usize, seeds: usize) -> ExperimentConfig {
    let text = serde_json::json!({
        "environment": "ar1_logistic_benchmark",
        "agents": [agent],
        "T": horizon,
        "num_seeds": seeds,
        "plot": false,
    });
    parse_config(&text.to_string()).unwrap()
}

fn particle_training(c: &mut Criterion) {
    let mut group = c.benchmark_group("particle_training");
    group.sample_size(10);
    for mode in [ExecMode::Sequential, ExecMode::Parallel] {
        let agent = serde_json::json!({"kind": "neural_pes", "exec": mode, "train_interval": 50});
        let cfg = config(agent, 300, 1);
        group.bench_with_input(BenchmarkId::from_parameter(format!("{mode:?}")), &cfg, |b, cfg| {
            b.iter(|| run_single(cfg, 0, 0).unwrap())
        });
    }
    group.finish();
}

fn experiment_runs(c: &mut Criterion) {
    let mut group = c.benchmark_group("experiment_runs");
    group.sample_size(10);
    let dir = tempfile::tempdir().unwrap();
    for mode in [ExecMode::Sequential, ExecMode::Parallel] {
        let mut cfg = config(serde_json::json!({"kind": "window_neural_ensemble", "exec": "sequential"}), 500, 4);
        cfg.exec = mode;
        cfg.output_dir = dir.path().join(format!("{mode:?}"));
        group.bench_with_input(BenchmarkId::from_parameter(format!("{mode:?}")), &cfg, |b, cfg| {
            b.iter(|| run_experiment(cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, particle_training, experiment_runs);
criterion_main!(benches);
