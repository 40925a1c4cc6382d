use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use jkoflow::fv::{fv_run, FvConfig};
use jkoflow::jko::jko_step;
use jkoflow::model::presets;
use jkoflow::transport::w2_sq;
use jkoflow::JkoConfig;
use jkoflow_bench::coupled_pair;

fn bench_w2(c: &mut Criterion) {
    let mut group = c.benchmark_group("w2_sq");
    for n in [256, 1024, 4096] {
        let p = coupled_pair(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &p, |b, p| b.iter(|| w2_sq(&p.rho1, &p.rho2)));
    }
    group.finish();
}

fn bench_jko_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("jko_step");
    group.sample_size(20);
    let model = presets::coupled_gaussian();
    let config = JkoConfig { tau: 2e-3, ..Default::default() };
    for n in [128, 256, 512] {
        let p = coupled_pair(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &p, |b, p| {
            b.iter(|| jko_step(p, &model, &config).expect("step"))
        });
    }
    group.finish();
}

fn bench_fv(c: &mut Criterion) {
    let mut group = c.benchmark_group("fv_run");
    group.sample_size(10);
    let model = presets::coupled_gaussian();
    let config = FvConfig { snapshot_interval: 1e-2, ..Default::default() };
    for n in [128, 256] {
        let p = coupled_pair(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &p, |b, p| {
            b.iter(|| fv_run(p, 2e-2, &model, &config).expect("fv run"))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_w2, bench_jko_step, bench_fv);
criterion_main!(benches);
