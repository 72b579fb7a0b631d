use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use armloop::exec::Execution;
use armloop::harness::{builtin_tasks, oracle_backend, run_tasks, HarnessConfig};
use armloop::robot::RobotSpec;

fn batch(c: &mut Criterion) {
    let tasks = builtin_tasks();
    let spec = RobotSpec::scara();
    let mut group = c.benchmark_group("oracle_batch_12x2");
    group.sample_size(10);
    for (name, execution) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel(0))] {
        let config = HarnessConfig { execution, ..HarnessConfig::default() };
        group.bench_with_input(BenchmarkId::from_parameter(name), &config, |b, config| {
            b.iter(|| run_tasks(&tasks, 2, &spec, &oracle_backend, config).expect("trials > 0"));
        });
    }
    group.finish();
}

criterion_group!(benches, batch);
criterion_main!(benches);
