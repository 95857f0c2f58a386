use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use workstat::quad::InversionPlan;
use workstat::sweep::{run_sweep, Quantity};
use workstat::verify::sign_map_plan;
use workstat::workstats::invert_spectral;
use workstat::{Execution, SystemSpec};

const MODES: [(&str, Execution); 2] =
    [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("sign_map_32x32");
    group.sample_size(10);
    let plan = sign_map_plan(32);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| run_sweep(&plan, Quantity::WExt, exec).unwrap())
        });
    }
    group.finish();
}

fn inversion(c: &mut Criterion) {
    let mut group = c.benchmark_group("spectral_inversion");
    group.sample_size(10);
    let spec = SystemSpec::pure_bath(5.0, 1.0);
    let plan = InversionPlan::for_source(&spec.source, 0.0);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| invert_spectral(&spec, &plan, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, sweep, inversion);
criterion_main!(benches);
