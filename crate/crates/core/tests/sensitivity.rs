use gime_core::fixtures;
use gime_core::model::{Criterion, Merit, MetricId, MetricVector, SensitivityLevel, SensitivityProfile};
use gime_core::selector::evaluate_thresholds;
use gime_core::sensitivity::{derive_thresholds, fit_sensitivity, SweepPoint, SweepSet, ThresholdPolicy};
use proptest::prelude::*;

fn sweep(metric: MetricId, xs: &[f64], perf: &[f64]) -> SweepSet {
    let points = xs
        .iter()
        .zip(perf)
        .enumerate()
        .map(|(i, (&x, &p))| SweepPoint {
            metrics: MetricVector::new().with(metric, x),
            performance: p,
            varied_metric: metric,
            tag: format!("p{i}"),
        })
        .collect();
    SweepSet::new(points, Merit::HigherBetter)
}

fn civil_pool(n: f64) -> MetricVector {
    MetricVector::new()
        .with(MetricId::Volume, n)
        .with(MetricId::Delay, 0.0)
        .with(MetricId::Scope, 32.0)
        .with(MetricId::Granularity, 1.0)
        .with(MetricId::Variety, 100.0)
        .with(MetricId::Duration, 6.0)
        .with(MetricId::SamplingRate, 1.0)
        .with(MetricId::Aggregation, 0.245)
        .with(MetricId::Distortion, 0.0)
        .with(MetricId::Mismatch, 0.0)
}

#[test]
fn civil_profile_thresholds() {
    let spec = derive_thresholds(&fixtures::civil_profile(), &civil_pool(100_000.0), &fixtures::civil_policy()).unwrap();
    assert_eq!(spec.criterion(MetricId::Volume), Criterion::AtLeast(60_000.0));
    assert_eq!(spec.criterion(MetricId::Scope), Criterion::AtLeast(27.0));
    assert_eq!(
        spec.criterion(MetricId::Variety),
        Criterion::EqualPoolOptimal { tolerance: 0.0 }
    );
    assert!(matches!(
        spec.criterion(MetricId::Aggregation),
        Criterion::EqualPoolOptimal { .. }
    ));
    assert_eq!(spec.criterion(MetricId::Duration), Criterion::Ignore);
}

#[test]
fn ctr_profile_volume_band() {
    let pool = civil_pool(40_000.0).with(MetricId::Granularity, 1.0);
    let spec = derive_thresholds(&fixtures::ctr_profile(), &pool, &fixtures::ctr_policy()).unwrap();
    assert_eq!(
        spec.criterion(MetricId::Volume),
        Criterion::Range {
            lo: 10_000.0,
            hi: 30_000.0
        }
    );
    let spec = derive_thresholds(&fixtures::ctr_profile(), &pool, &ThresholdPolicy::default()).unwrap();
    assert_eq!(
        spec.criterion(MetricId::Volume),
        Criterion::Range {
            lo: 10_000.0,
            hi: 30_000.0
        }
    );
    let low = pool.clone().with(MetricId::Volume, 8_000.0);
    let v = evaluate_thresholds(&low, &spec, &pool);
    assert!(!v.pass);
    assert_eq!(v.failing().collect::<Vec<_>>(), vec![MetricId::Volume]);
}

#[test]
fn all_low_ignores_everything() {
    let spec = derive_thresholds(
        &SensitivityProfile::all_low(),
        &MetricVector::new(),
        &ThresholdPolicy::default(),
    )
    .unwrap();
    assert_eq!(spec.active().count(), 0);
}

#[test]
fn perfect_monotone_is_rho_one() {
    let fit = fit_sensitivity(
        &sweep(MetricId::Volume, &[1.0, 2.0, 3.0, 4.0], &[0.1, 0.2, 0.25, 0.9]),
        0.8,
        0.4,
    )
    .unwrap();
    let e = fit.profile.entry(MetricId::Volume);
    assert_eq!(e.level, SensitivityLevel::High);
    assert_eq!(fit.profile.level(MetricId::Scope), SensitivityLevel::Low);
    assert!(!fit.warnings.is_empty());
}

fn metric_values() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0f64..100.0, -5.0f64..5.0), 4..30)
}

fn levels() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..3, MetricId::COUNT)
}

proptest! {
    #[test]
    fn fit_ignores_monotone_performance_transforms(pts in metric_values()) {
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        prop_assume!(xs.iter().any(|&x| x != xs[0]));
        let warped: Vec<f64> = ys.iter().map(|y| (y * 0.7).exp() + 3.0 * y).collect();
        let a = fit_sensitivity(&sweep(MetricId::Coverage, &xs, &ys), 0.8, 0.4).unwrap();
        let b = fit_sensitivity(&sweep(MetricId::Coverage, &xs, &warped), 0.8, 0.4).unwrap();
        prop_assert_eq!(a.profile, b.profile);
    }

    #[test]
    fn fit_ignores_metric_rescaling(pts in metric_values(), scale in 0.001f64..1000.0) {
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        prop_assume!(xs.iter().any(|&x| x != xs[0]));
        let scaled: Vec<f64> = xs.iter().map(|x| x * scale).collect();
        let a = fit_sensitivity(&sweep(MetricId::Duration, &xs, &ys), 0.8, 0.4).unwrap();
        let b = fit_sensitivity(&sweep(MetricId::Duration, &scaled, &ys), 0.8, 0.4).unwrap();
        prop_assert_eq!(a.profile, b.profile);
    }

    /// Moderate volume is exempt: its default band [0.25, 0.75] of the pool
    /// excludes the pool's own volume by design.
    #[test]
    fn pool_passes_its_own_derived_spec(levels in levels(), vals in prop::collection::vec(0.0f64..1.0, MetricId::COUNT)) {
        let mut high = Vec::new();
        let mut moderate = Vec::new();
        for (m, l) in MetricId::ALL.iter().zip(&levels) {
            match l {
                2 => high.push(*m),
                1 if *m != MetricId::Volume => moderate.push(*m),
                _ => {}
            }
        }
        let profile = SensitivityProfile::manual(&high, &moderate);
        let mut pool = MetricVector::new();
        for (m, v) in MetricId::ALL.iter().zip(&vals) {
            let v = if m.is_count() { (v * 1_000.0).round() + 1.0 } else { v + 0.001 };
            pool.set(*m, Some(v));
        }
        let spec = derive_thresholds(&profile, &pool, &ThresholdPolicy::default()).unwrap();
        let verdicts = evaluate_thresholds(&pool, &spec, &pool);
        prop_assert!(verdicts.pass, "{:?}", verdicts);
    }
}
