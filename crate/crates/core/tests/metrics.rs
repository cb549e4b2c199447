use std::collections::BTreeMap;

use gime_core::fixtures;
use gime_core::ingest::{
    Dataset, DatasetManifest, DurationMode, FieldDef, FieldKind, MismatchTarget, Record, Schema, TimeQuantity, TruthMode,
    TruthReference, Value,
};
use gime_core::metrics::{self, compute_all, MetricsEngine, PartialMetricState};
use gime_core::rng::Stream;
use gime_core::{Error, MetricId, MetricVector};
use proptest::prelude::*;

const DAY: i64 = 86_400;
const YEAR: i64 = 31_557_600;

fn field(name: &str, kind: FieldKind) -> FieldDef {
    FieldDef::new(name, kind)
}

fn t(s: &str) -> Value {
    Value::Text(s.into())
}

fn ds(m: &DatasetManifest, rows: Vec<Vec<Value>>) -> Dataset {
    Dataset::from_records(m, rows.into_iter().map(Record::new).collect()).unwrap()
}

fn ids(n: usize) -> impl Iterator<Item = Value> {
    (0..n).map(|i| Value::Text(format!("r{i}")))
}

/// id plus one field bound by `bind`.
fn one_field(kind: FieldKind, bind: impl FnOnce(&mut DatasetManifest)) -> DatasetManifest {
    let schema = Schema::new(vec![field("id", FieldKind::Text), field("x", kind)]);
    let mut m = DatasetManifest::new(schema, "id", TimeQuantity::days(1.0));
    bind(&mut m);
    m
}

fn column(m: &DatasetManifest, xs: Vec<Value>) -> Dataset {
    let rows = ids(xs.len()).zip(xs).map(|(id, x)| vec![id, x]).collect();
    ds(m, rows)
}

fn metric(m: &DatasetManifest, d: &Dataset, id: MetricId) -> Option<f64> {
    compute_all(d, m).unwrap().get(id)
}

#[test]
fn empty_and_unbound() {
    let m = fixtures::civil_manifest();
    let v = compute_all(&ds(&m, vec![]), &m).unwrap();
    assert_eq!(v.get(MetricId::Volume), Some(0.0));
    assert_eq!(v.get(MetricId::Delay), Some(0.0));
    for id in [MetricId::Scope, MetricId::Variety, MetricId::Aggregation, MetricId::Mismatch] {
        assert_eq!(v.get(id), None, "{id}");
    }

    let bare = DatasetManifest::new(Schema::new(vec![field("id", FieldKind::Text)]), "id", TimeQuantity::days(1.0));
    let d = ds(&bare, ids(4).map(|v| vec![v]).collect());
    let out = metrics::compute_all_detailed(&d, &bare, &Default::default()).unwrap();
    let present: Vec<_> = out.metrics.present().map(|(id, _)| id).collect();
    // Delay without time bindings is an annotated default, not a measurement.
    assert_eq!(present, vec![MetricId::Volume, MetricId::Delay]);
    assert_eq!(out.metrics.get(MetricId::Delay), Some(0.0));
    assert_eq!(out.provenance[MetricId::Delay].note.as_deref(), Some("assumed zero delay"));
}

#[test]
fn delay_is_max_lag() {
    let schema = Schema::new(vec![
        field("id", FieldKind::Text),
        field("ev", FieldKind::Timestamp),
        field("col", FieldKind::Timestamp),
    ]);
    let mut m = DatasetManifest::new(schema, "id", TimeQuantity::days(1.0));
    m.event_time_field = Some("ev".into());
    m.collection_time_field = Some("col".into());
    let rows = |lags: &[i64]| -> Vec<Vec<Value>> {
        ids(lags.len())
            .zip(lags)
            .map(|(id, &l)| vec![id, Value::Timestamp(1_000 * DAY), Value::Timestamp(1_000 * DAY + l * DAY)])
            .collect()
    };
    assert_eq!(metrics::compute_delay(&ds(&m, rows(&[1, 5, 3])), &m).unwrap(), 5.0);
    assert_eq!(metrics::compute_delay(&ds(&m, rows(&[0, 0])), &m).unwrap(), 0.0);
    let err = compute_all(&ds(&m, rows(&[1, -1])), &m).unwrap_err();
    assert!(matches!(err, Error::NegativeDelay { line: 2 }), "{err:?}");
}

#[test]
fn scope_and_variety_count_distinct() {
    let m = one_field(FieldKind::Text, |m| m.scope_field = Some("x".into()));
    assert_eq!(
        metrics::compute_scope(&column(&m, vec![t("A"), t("B"), t("A")]), &m).unwrap(),
        Some(2)
    );
    assert_eq!(metrics::compute_scope(&column(&m, vec![t("P"); 5]), &m).unwrap(), Some(1));

    let m = one_field(FieldKind::Text, |m| m.variety_field = Some("x".into()));
    let d = column(&m, vec![t("a"), t("b"), t("c"), t("a")]);
    assert_eq!(metrics::compute_variety(&d, &m).unwrap(), Some(3));
}

#[test]
fn granularity_mean_and_constant() {
    let m = one_field(FieldKind::Real, |m| m.granularity_field = Some("x".into()));
    let d = column(&m, vec![Value::Real(0.5), Value::Real(1.5)]);
    assert_eq!(metrics::compute_granularity(&d, &m).unwrap(), Some(1.0));
    let bad = column(&m, vec![Value::Real(0.5), Value::Real(0.0)]);
    assert!(matches!(
        compute_all(&bad, &m),
        Err(Error::NonPositiveGranularity { line: 2, .. })
    ));

    let m = one_field(FieldKind::Real, |m| m.granularity_constant = Some(1.0));
    assert_eq!(
        metric(&m, &column(&m, vec![Value::Real(9.0)]), MetricId::Granularity),
        Some(1.0)
    );
}

#[test]
fn duration_span_and_buckets() {
    let mut m = one_field(FieldKind::Timestamp, |m| m.event_time_field = Some("x".into()));
    m.time_unit = TimeQuantity::years(1.0);
    let one = column(&m, vec![Value::Timestamp(5 * DAY)]);
    assert_eq!(metrics::compute_duration(&one, &m).unwrap(), Some(0.0));

    // Julian-year buckets 30, 33 and 34 after the epoch.
    m.duration_mode = DurationMode::BucketUnion {
        bucket_size: TimeQuantity::years(1.0),
    };
    let d = column(
        &m,
        [30, 33, 34, 33].iter().map(|y| Value::Timestamp(y * YEAR + 1_000)).collect(),
    );
    assert_eq!(metrics::compute_duration(&d, &m).unwrap(), Some(3.0));
}

fn sampled(groups: &[(usize, i64)]) -> (DatasetManifest, Dataset) {
    let schema = Schema::new(vec![
        field("id", FieldKind::Text),
        field("g", FieldKind::Text),
        field("t", FieldKind::Timestamp),
    ]);
    let mut m = DatasetManifest::new(schema, "id", TimeQuantity::days(1.0));
    m.scope_field = Some("g".into());
    m.event_time_field = Some("t".into());
    m.nominal_sampling_interval = Some(TimeQuantity::days(1.0));
    let mut rows = Vec::new();
    for (g, &(count, every)) in groups.iter().enumerate() {
        for j in 0..count as i64 {
            rows.push(vec![
                Value::Text(format!("g{g}-{j}")),
                Value::Text(format!("g{g}")),
                Value::Timestamp(20_000 * DAY + j * every * DAY),
            ]);
        }
    }
    let d = ds(&m, rows);
    (m, d)
}

#[test]
fn sampling_rate_examples() {
    let (m, d) = sampled(&[(30, 1)]);
    assert_eq!(metrics::compute_sampling_rate(&d, &m).unwrap(), Some(1.0));
    let (m, d) = sampled(&[(30, 2)]);
    assert_eq!(metrics::compute_sampling_rate(&d, &m).unwrap(), Some(0.5));
    let mut groups = vec![(20, 1); 8];
    groups.push((20, 10));
    let (m, d) = sampled(&groups);
    let r = metrics::compute_sampling_rate(&d, &m).unwrap().unwrap();
    assert!((r - 0.9).abs() < 1e-12, "{r}");
}

#[test]
fn single_instant_group_warns() {
    let (m, d) = sampled(&[(1, 1), (10, 1)]);
    let out = metrics::compute_all_detailed(&d, &m, &Default::default()).unwrap();
    assert_eq!(out.metrics.get(MetricId::SamplingRate), Some(1.0));
    assert!(out.warnings.iter().any(|w| w.contains("ZeroSpan")), "{:?}", out.warnings);
}

#[test]
fn aggregation_herfindahl() {
    let m = one_field(FieldKind::Text, |m| m.aggregation_field = Some("x".into()));
    let agg = |parts: &[&str]| metrics::compute_aggregation(&column(&m, parts.iter().map(|p| t(p)).collect()), &m).unwrap();
    assert_eq!(agg(&["a", "a", "a"]), Some(1.0));
    assert_eq!(agg(&["a", "b", "a", "b"]), Some(0.5));
    assert_eq!(agg(&["a", "b", "c", "d"]), Some(0.25));
}

#[test]
fn coverage_fraction_of_universe() {
    let universe: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
    let m = one_field(FieldKind::Text, |m| {
        m.coverage_field = Some("x".into());
        m.coverage_universe = Some(universe.clone());
    });
    assert_eq!(
        metrics::compute_coverage(&column(&m, vec![t("a"), t("b"), t("a")]), &m).unwrap(),
        Some(0.5)
    );
    let full = column(&m, universe.iter().map(|u| t(u)).collect());
    assert_eq!(metrics::compute_coverage(&full, &m).unwrap(), Some(1.0));
    let out = metrics::compute_all_detailed(&column(&m, vec![t("a"), t("zz")]), &m, &Default::default()).unwrap();
    assert_eq!(out.metrics.get(MetricId::Coverage), Some(0.25));
    assert!(out.warnings.iter().any(|w| w.contains("zz")));

    let m = one_field(FieldKind::Text, |m| m.coverage_field = Some("x".into()));
    assert_eq!(metrics::compute_coverage(&column(&m, vec![t("a")]), &m).unwrap(), None);
}

#[test]
fn distortion_flags_and_truth_reference() {
    let m = one_field(FieldKind::Boolean, |m| m.distortion_field = Some("x".into()));
    let flags = (0..10).map(|i| Value::Boolean(i == 3)).collect();
    assert_eq!(metrics::compute_distortion(&column(&m, flags), &m).unwrap(), Some(0.1));
    let clean = (0..10).map(|_| Value::Boolean(false)).collect();
    assert_eq!(metrics::compute_distortion(&column(&m, clean), &m).unwrap(), Some(0.0));

    let dir = tempfile::tempdir().unwrap();
    let truth = dir.path().join("truth.csv");
    let mut body = String::from("id,x\n");
    for i in 0..10 {
        body.push_str(&format!("r{i},{}\n", if i < 5 { "cat" } else { "dog" }));
    }
    std::fs::write(&truth, body).unwrap();
    let m = one_field(FieldKind::Text, |m| {
        m.truth_reference = Some(TruthReference {
            path: truth.clone(),
            format: None,
            join_key: "id".into(),
            compare_field: "x".into(),
            reference_field: None,
            mode: TruthMode::Categorical,
        })
    });
    let d = column(&m, (0..10).map(|_| t("cat")).collect());
    assert_eq!(metrics::compute_distortion(&d, &m).unwrap(), Some(0.5));
}

#[test]
fn mismatch_binary_and_categorical() {
    let m = one_field(FieldKind::Text, |m| {
        m.label_field = Some("x".into());
        m.mismatch_target = Some(MismatchTarget::Binary {
            positive_label: "1".into(),
            rate: 0.5,
        });
    });
    let labels = |pos: usize, n: usize| (0..n).map(|i| t(if i < pos { "1" } else { "0" })).collect();
    let r = metrics::compute_mismatch(&column(&m, labels(17, 100)), &m).unwrap().unwrap();
    assert!((r - 0.33).abs() < 1e-12, "{r}");
    assert_eq!(
        metrics::compute_mismatch(&column(&m, labels(50, 100)), &m).unwrap(),
        Some(0.0)
    );

    let target: BTreeMap<String, f64> = [("a".to_string(), 0.25), ("b".to_string(), 0.75)].into();
    let m = one_field(FieldKind::Text, |m| {
        m.label_field = Some("x".into());
        m.mismatch_target = Some(MismatchTarget::Categorical(target));
    });
    assert_eq!(
        metrics::compute_mismatch(&column(&m, vec![t("a"), t("b"), t("b"), t("b")]), &m).unwrap(),
        Some(0.0)
    );
    assert_eq!(
        metrics::compute_mismatch(&column(&m, vec![t("a"), t("a")]), &m).unwrap(),
        Some(0.75)
    );
    assert!(matches!(
        compute_all(&column(&m, vec![t("c")]), &m),
        Err(Error::UnknownLabel { .. })
    ));
}

#[test]
fn civil_descriptor_at_full_scale() {
    let m = fixtures::civil_manifest();
    let d = Dataset::from_records(&m, fixtures::civil_records(100_000).unwrap()).unwrap();
    let v = compute_all(&d, &m).unwrap();
    assert_eq!(metrics::compute_volume(&d), 100_000);
    assert_eq!(v.get(MetricId::Scope), Some(32.0));
    assert_eq!(v.get(MetricId::Variety), Some(100.0));
    assert_eq!(v.get(MetricId::Duration), Some(6.0));
    assert_eq!(v.get(MetricId::SamplingRate), Some(1.0));
    assert!((v.get(MetricId::Aggregation).unwrap() - 0.245).abs() < 1e-12);
    assert_eq!(v.get(MetricId::Mismatch), Some(0.0));
}

/// Every metric bound; 1,000 records unless `n` says otherwise.
fn rich(n: usize, seed: u64) -> (DatasetManifest, Vec<Record>) {
    let schema = Schema::new(vec![
        field("id", FieldKind::Text),
        field("province", FieldKind::Text),
        field("kind", FieldKind::Text),
        field("part", FieldKind::Text),
        field("ev", FieldKind::Timestamp),
        field("col", FieldKind::Timestamp),
        field("g", FieldKind::Real),
        field("cov", FieldKind::Text),
        field("err", FieldKind::Real),
        field("label", FieldKind::Text),
    ]);
    let mut m = DatasetManifest::new(schema, "id", TimeQuantity::days(1.0));
    m.scope_field = Some("province".into());
    m.variety_field = Some("kind".into());
    m.aggregation_field = Some("part".into());
    m.event_time_field = Some("ev".into());
    m.collection_time_field = Some("col".into());
    m.granularity_field = Some("g".into());
    m.coverage_field = Some("cov".into());
    m.coverage_universe = Some((0..12).map(|i| format!("c{i}")).collect());
    m.distortion_field = Some("err".into());
    m.label_field = Some("label".into());
    m.mismatch_target = Some(MismatchTarget::Binary {
        positive_label: "1".into(),
        rate: 0.3,
    });
    m.nominal_sampling_interval = Some(TimeQuantity::seconds(3_600.0));
    let mut s = Stream::new(seed);
    let recs = (0..n)
        .map(|i| {
            let ev = 18_000 * DAY + s.below(200 * 24) as i64 * 3_600;
            Record::new(vec![
                Value::Text(format!("r{i}")),
                Value::Text(format!("p{}", s.below(9))),
                Value::Text(format!("k{}", s.below(40))),
                Value::Text(format!("q{}", s.below(5))),
                Value::Timestamp(ev),
                Value::Timestamp(ev + s.below(5 * DAY as u64) as i64),
                Value::Real(0.1 + s.unit_f64()),
                Value::Text(format!("c{}", s.below(10))),
                Value::Real(s.unit_f64() * 0.2),
                Value::Text(if s.unit_f64() < 0.35 { "1" } else { "0" }.into()),
            ])
        })
        .collect();
    (m, recs)
}

const MEAN_METRICS: [MetricId; 4] = [
    MetricId::Granularity,
    MetricId::Distortion,
    MetricId::Mismatch,
    MetricId::SamplingRate,
];

fn assert_same(a: &MetricVector, b: &MetricVector) {
    for (id, x) in a.iter() {
        let y = b.get(id);
        match (x, y) {
            (Some(x), Some(y)) if MEAN_METRICS.contains(&id) => {
                assert!((x - y).abs() <= 1e-9 * x.abs().max(y.abs()), "{id}: {x} vs {y}")
            }
            _ => assert_eq!(x, y, "{id}"),
        }
    }
}

fn state(engine: &MetricsEngine, recs: &[Record]) -> PartialMetricState {
    engine.state_of_records(recs).unwrap()
}

#[test]
fn merge_identity_and_seven_chunks() {
    let (m, recs) = rich(1_000, 1);
    let engine = MetricsEngine::new(&m).unwrap();
    let whole = engine.compute_records(&recs).unwrap();

    let merged = metrics::merge_partials(state(&engine, &recs), engine.empty_state()).unwrap();
    assert_eq!(engine.finalize(&merged).unwrap().metrics, whole);

    let cuts = [0, 13, 140, 141, 500, 777, 901, 1_000];
    let parts: Vec<_> = cuts.windows(2).map(|w| state(&engine, &recs[w[0]..w[1]])).collect();
    let forward = parts
        .iter()
        .cloned()
        .reduce(|a, b| metrics::merge_partials(a, b).unwrap())
        .unwrap();
    let backward = parts
        .into_iter()
        .rev()
        .reduce(|a, b| metrics::merge_partials(a, b).unwrap())
        .unwrap();
    assert_same(&engine.finalize(&forward).unwrap().metrics, &whole);
    assert_eq!(
        engine.finalize(&forward).unwrap().metrics,
        engine.finalize(&backward).unwrap().metrics
    );
    assert_same(&engine.compute_parallel(&recs, 8).unwrap(), &whole);
}

#[test]
fn merge_rejects_other_manifest() {
    let (m, recs) = rich(50, 2);
    let mut other = m.clone();
    other.mismatch_target = Some(MismatchTarget::Binary {
        positive_label: "1".into(),
        rate: 0.5,
    });
    let a = state(&MetricsEngine::new(&m).unwrap(), &recs);
    let b = state(&MetricsEngine::new(&other).unwrap(), &recs);
    assert!(matches!(metrics::merge_partials(a, b), Err(Error::ManifestMismatch)));
}

#[test]
fn compute_all_matches_single_metric_operations() {
    let (m, recs) = rich(400, 3);
    let d = Dataset::from_records(&m, recs).unwrap();
    let v = compute_all(&d, &m).unwrap();
    assert_eq!(v.get(MetricId::Volume), Some(metrics::compute_volume(&d) as f64));
    assert_eq!(v.get(MetricId::Delay), Some(metrics::compute_delay(&d, &m).unwrap()));
    assert_eq!(
        v.get(MetricId::Scope),
        metrics::compute_scope(&d, &m).unwrap().map(|x| x as f64)
    );
    assert_eq!(
        v.get(MetricId::Variety),
        metrics::compute_variety(&d, &m).unwrap().map(|x| x as f64)
    );
    assert_eq!(v.get(MetricId::Granularity), metrics::compute_granularity(&d, &m).unwrap());
    assert_eq!(v.get(MetricId::Duration), metrics::compute_duration(&d, &m).unwrap());
    assert_eq!(v.get(MetricId::SamplingRate), metrics::compute_sampling_rate(&d, &m).unwrap());
    assert_eq!(v.get(MetricId::Aggregation), metrics::compute_aggregation(&d, &m).unwrap());
    assert_eq!(v.get(MetricId::Coverage), metrics::compute_coverage(&d, &m).unwrap());
    assert_eq!(v.get(MetricId::Distortion), metrics::compute_distortion(&d, &m).unwrap());
    assert_eq!(v.get(MetricId::Mismatch), metrics::compute_mismatch(&d, &m).unwrap());
}

#[test]
fn duplicating_records_is_scale_invariant() {
    let (m, recs) = rich(300, 4);
    let engine = MetricsEngine::new(&m).unwrap();
    let once = engine.compute_records(&recs).unwrap();
    let mut twice = recs.clone();
    twice.extend(recs.iter().cloned());
    let twice = engine.compute_records(&twice).unwrap();
    assert_eq!(twice.get(MetricId::Volume), Some(600.0));
    for id in [
        MetricId::Scope,
        MetricId::Variety,
        MetricId::Granularity,
        MetricId::Coverage,
        MetricId::Mismatch,
        MetricId::Aggregation,
        MetricId::Delay,
    ] {
        let (a, b) = (once.get(id).unwrap(), twice.get(id).unwrap());
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{id}: {a} vs {b}");
    }
}

fn relabel(recs: &[Record], tag: &str) -> Vec<Record> {
    recs.iter()
        .map(|r| {
            let mut v = r.values().to_vec();
            for i in [0, 1, 2] {
                v[i] = Value::Text(format!("{tag}{}", v[i].key()));
            }
            Record::new(v)
        })
        .collect()
}

#[test]
fn additive_max_and_mean_laws() {
    let (m, recs) = rich(600, 5);
    let engine = MetricsEngine::new(&m).unwrap();
    let (a, b) = (relabel(&recs[..250], "a"), relabel(&recs[250..], "b"));
    let (va, vb) = (engine.compute_records(&a).unwrap(), engine.compute_records(&b).unwrap());
    let union: Vec<Record> = a.iter().chain(&b).cloned().collect();
    let vu = engine.compute_records(&union).unwrap();
    for id in [MetricId::Volume, MetricId::Scope, MetricId::Variety] {
        assert_eq!(vu.get(id).unwrap(), va.get(id).unwrap() + vb.get(id).unwrap(), "{id}");
    }
    assert_eq!(
        vu.get(MetricId::Delay),
        Some(va.get(MetricId::Delay).unwrap().max(vb.get(MetricId::Delay).unwrap()))
    );
    for id in [MetricId::Granularity, MetricId::Distortion] {
        let w = (250.0 * va.get(id).unwrap() + 350.0 * vb.get(id).unwrap()) / 600.0;
        assert!((vu.get(id).unwrap() - w).abs() <= 1e-9 * w, "{id}");
    }
    let rate = |v: &MetricVector| v.get(MetricId::Mismatch).unwrap();
    // Positive rates sit above the 0.3 target on both parts.
    let pos = |v: &MetricVector| 0.3 + rate(v);
    let w = (250.0 * pos(&va) + 350.0 * pos(&vb)) / 600.0 - 0.3;
    if pos(&va) > 0.3 && pos(&vb) > 0.3 {
        assert!((rate(&vu) - w).abs() <= 1e-9);
    }
}

#[test]
fn bucket_duration_is_additive_over_disjoint_buckets() {
    let mut m = one_field(FieldKind::Timestamp, |m| m.event_time_field = Some("x".into()));
    m.duration_mode = DurationMode::BucketUnion {
        bucket_size: TimeQuantity::days(1.0),
    };
    let days = |ds: &[i64]| ds.iter().map(|d| Value::Timestamp(d * DAY + 60)).collect::<Vec<_>>();
    let a = column(&m, days(&[1, 2, 2, 5]));
    let b = column(&m, days(&[7, 9]));
    let u = column(&m, days(&[1, 2, 2, 5, 7, 9]));
    let dur = |d: &Dataset| metrics::compute_duration(d, &m).unwrap().unwrap();
    assert_eq!(dur(&u), dur(&a) + dur(&b));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn random_partitions_merge_to_single_pass(seed in any::<u64>(), chunks in 2usize..=10) {
        let (m, recs) = rich(1_000, 11);
        let engine = MetricsEngine::new(&m).unwrap();
        let whole = engine.compute_records(&recs).unwrap();
        let mut s = Stream::new(seed);
        let mut owner: Vec<usize> = (0..recs.len()).map(|_| s.below_usize(chunks)).collect();
        owner[..chunks].copy_from_slice(&(0..chunks).collect::<Vec<_>>());
        let mut parts: Vec<PartialMetricState> = (0..chunks).map(|_| engine.empty_state()).collect();
        for (i, r) in recs.iter().enumerate() {
            parts[owner[i]].accumulate(engine.context(), i as u64 + 1, r).unwrap();
        }
        for i in (1..parts.len()).rev() {
            parts.swap(i, s.below_usize(i + 1));
        }
        let merged = parts.into_iter().reduce(|a, b| metrics::merge_partials(a, b).unwrap()).unwrap();
        assert_same(&engine.finalize(&merged).unwrap().metrics, &whole);
    }

    #[test]
    fn metrics_ignore_record_order(seed in any::<u64>()) {
        let (m, mut recs) = rich(200, 12);
        let engine = MetricsEngine::new(&m).unwrap();
        let before = engine.compute_records(&recs).unwrap();
        let mut s = Stream::new(seed);
        for i in (1..recs.len()).rev() {
            recs.swap(i, s.below_usize(i + 1));
        }
        assert_same(&engine.compute_records(&recs).unwrap(), &before);
    }
}
