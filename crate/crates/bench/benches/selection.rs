use std::time::Duration;

use criterion::{criterion_group, criterion_main, Criterion};
use gime_core::fixtures;
use gime_core::ingest::Dataset;
use gime_core::selector::{gime_select, random_select, SelectionOptions, TargetVolume};

fn bench_selection(c: &mut Criterion) {
    let manifest = fixtures::civil_manifest();
    let pool = Dataset::from_records(&manifest, fixtures::civil_records(10_000).unwrap()).unwrap();
    let spec = fixtures::civil_thresholds(10_000);
    let mut group = c.benchmark_group("civil_10k");
    group.sample_size(10).measurement_time(Duration::from_secs(20));
    group.bench_function("gated", |b| {
        let mut seed = 0;
        b.iter(|| {
            seed += 1;
            gime_select(
                &pool,
                &manifest,
                &spec,
                &SelectionOptions::new(TargetVolume::Count(6_000), seed),
            )
            .unwrap()
        });
    });
    group.bench_function("random", |b| {
        let mut seed = 0;
        b.iter(|| {
            seed += 1;
            random_select(&pool, &manifest, 6_000, seed).unwrap()
        });
    });
    group.finish();
}

criterion_group!(benches, bench_selection);
criterion_main!(benches);
