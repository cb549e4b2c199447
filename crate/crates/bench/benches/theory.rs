use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gime_core::theory::{eq1_check_random, exact_expectation, verify_lemma, SyntheticPoolSpec, ValueLaw, ValuedPool};
use gime_core::MetricTypeClass;

fn bench_lemma(c: &mut Criterion) {
    let mut group = c.benchmark_group("lemma");
    group.sample_size(10);
    for trials in [500usize, 2_000] {
        let spec = SyntheticPoolSpec::new(10_000, ValueLaw::Uniform { lo: 0.0, hi: 1.0 }, MetricTypeClass::MeanType, 1);
        group.bench_with_input(BenchmarkId::new("n10000_k0.3", trials), &trials, |b, &t| {
            b.iter(|| verify_lemma(&spec, 0.3, t, 0.005).unwrap());
        });
    }
    group.finish();
}

fn bench_enumeration(c: &mut Criterion) {
    let pool = ValuedPool::new((1..=20).map(f64::from).collect()).unwrap();
    c.bench_function("enumerate_20_choose_10_max", |b| {
        b.iter(|| exact_expectation(&pool, MetricTypeClass::MaximumType, 10).unwrap());
    });
}

fn bench_volume_identity(c: &mut Criterion) {
    let mut group = c.benchmark_group("volume_identity");
    group.sample_size(10);
    group.bench_function("200_configs", |b| b.iter(|| eq1_check_random(200, 7).unwrap()));
    group.finish();
}

criterion_group!(benches, bench_lemma, bench_enumeration, bench_volume_identity);
criterion_main!(benches);
