use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dephase_lab::channels::ProbeFamily;
use dephase_lab::coherence::robustness_curve;
use dephase_lab::exec::Execution;
use dephase_lab::metrology::{fringe, qfi_sweep};
use dephase_lab::shotsim::{mc_interval, normalized_frequency, sample_counts, ConfidenceLevel};

const STRATEGIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn p_grid(points: usize) -> Vec<f64> {
    (0..points).map(|i| i as f64 / (points - 1) as f64).collect()
}

fn coherence_sweep(c: &mut Criterion) {
    let family = ProbeFamily::cluster_encoded(4).unwrap();
    let grid = p_grid(8);
    let mut group = c.benchmark_group("coherence_sweep_k2");
    group.sample_size(10);
    for (name, exec) in STRATEGIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| robustness_curve(&family, 2, &grid, exec).unwrap())
        });
    }
    group.finish();
}

fn qfi_grid(c: &mut Criterion) {
    let ns: Vec<usize> = (2..=7).collect();
    let grid = p_grid(11);
    let mut group = c.benchmark_group("qfi_sweep");
    group.sample_size(10);
    for (name, exec) in STRATEGIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| qfi_sweep(ProbeFamily::ghz, &ns, &grid, exec).unwrap())
        });
    }
    group.finish();
}

fn fringe_grid(c: &mut Criterion) {
    let family = ProbeFamily::ghz_encoded(6).unwrap();
    let phis: Vec<f64> = (0..=1000).map(|i| i as f64 * std::f64::consts::PI / 1000.0).collect();
    let mut group = c.benchmark_group("fringe_1001_points");
    for (name, exec) in STRATEGIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| fringe(&family, 0.3, &phis, exec).unwrap())
        });
    }
    group.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let probs: Vec<f64> = vec![1.0 / 16.0; 16];
    let record = sample_counts(&probs, 100_000, 1).unwrap();
    let stat = normalized_frequency(0);
    let mut group = c.benchmark_group("mc_interval_10000");
    for (name, exec) in STRATEGIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| mc_interval(&stat, &record, 10_000, ConfidenceLevel::ThreeSigma, 2, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, coherence_sweep, qfi_grid, fringe_grid, monte_carlo);
criterion_main!(benches);
