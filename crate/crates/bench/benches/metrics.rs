use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use gime_core::{fixtures, MetricsEngine};

fn bench_metric_pass(c: &mut Criterion) {
    let manifest = fixtures::civil_manifest();
    let engine = MetricsEngine::new(&manifest).unwrap();
    let mut group = c.benchmark_group("metric_pass");
    for n in [10_000usize, 100_000] {
        let records = fixtures::civil_records(n).unwrap();
        group.throughput(Throughput::Elements(n as u64));
        group.bench_with_input(BenchmarkId::new("sequential", n), &records, |b, r| {
            b.iter(|| engine.compute_records(black_box(r)).unwrap());
        });
        group.bench_with_input(BenchmarkId::new("chunked_8", n), &records, |b, r| {
            b.iter(|| engine.compute_parallel(black_box(r), 8).unwrap());
        });
    }
    group.finish();
}

criterion_group!(benches, bench_metric_pass);
criterion_main!(benches);
