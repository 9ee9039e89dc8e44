use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mimo_replica::montecarlo::{self, McConfig, Scheme};
use mimo_replica::scenarios::{example1_perfect_csi, qpsk_transition};
use mimo_replica::solver::{sweep, Axis, SweepOptions};
use mimo_replica::{Execution, Prior, SolverConfig};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn qpsk_sweep(c: &mut Criterion) {
    let p = qpsk_transition(1.0, 0.1).unwrap();
    let grid: Vec<f64> = (0..32).map(|i| 0.5 + 0.1 * i as f64).collect();
    let config = SolverConfig::default();
    let mut group = c.benchmark_group("qpsk_alpha_sweep");
    group.sample_size(10);
    for (name, execution) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            let opts = SweepOptions { warm_start: false, execution };
            b.iter(|| sweep(&p.scenario, &p.pins, Axis::Alpha, &grid, &config, opts).unwrap())
        });
    }
    group.finish();
}

fn perfect_csi_trials(c: &mut Criterion) {
    let s = example1_perfect_csi(1.0, 1.0, 1.0, Prior::gaussian(1.0)).unwrap().scenario;
    let cfg = McConfig { k: 32, trials: 64, seed: 0, scheme: Scheme::PerfectCsiLmmse };
    let mut group = c.benchmark_group("perfect_csi_monte_carlo");
    group.sample_size(10);
    for (name, execution) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| montecarlo::run(&s, &cfg, execution).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, qpsk_sweep, perfect_csi_trials);
criterion_main!(benches);
