use gime_core::model::{MetricId, MetricTypeClass, SensitivityLevel};
use gime_core::sensitivity::{fit_sensitivity, SweepPoint, SweepSet, DEFAULT_RHO_HIGH, DEFAULT_RHO_MOD};
use gime_core::theory::{
    eq1_check_random, eq1_generate_and_check, exact_expectation, generate_sweep, lemma_expectation, monte_carlo_expectation,
    optimal_subset, subset_metric, theorem_trial, verify_enumeration, verify_lemma, Eq1Config, SurrogateModel, SyntheticPoolSpec,
    ValueLaw, ValuedPool,
};
use gime_core::{Merit, MetricVector};
use proptest::prelude::*;

const CLASSES: [MetricTypeClass; 4] = [
    MetricTypeClass::Additive,
    MetricTypeClass::MaximumType,
    MetricTypeClass::MinimumType,
    MetricTypeClass::MeanType,
];

fn uniform(n: usize, seed: u64) -> SyntheticPoolSpec {
    SyntheticPoolSpec::new(n, ValueLaw::Uniform { lo: 0.0, hi: 1.0 }, MetricTypeClass::MeanType, seed)
}

fn one_to(n: usize) -> ValuedPool {
    ValuedPool::new((1..=n).map(|v| v as f64).collect()).unwrap()
}

#[test]
fn lemma_defaults_pass_all_classes() {
    let r = verify_lemma(&uniform(10_000, 1), 0.3, 2_000, 0.005).unwrap();
    assert!(r.pass, "{r:#?}");
    assert_eq!(r.classes.len(), 4);
    let max = r
        .classes
        .iter()
        .find(|c| c.type_class == MetricTypeClass::MaximumType)
        .unwrap();
    assert!((max.closed_form - 3000.0 / 3001.0).abs() < 1e-4);
}

#[test]
fn lemma_high_fraction() {
    assert!(verify_lemma(&uniform(10_000, 2), 0.9, 500, 0.005).unwrap().pass);
}

#[test]
fn zero_tolerance_is_below_noise() {
    let r = verify_lemma(&uniform(2_000, 3), 0.3, 200, 0.0).unwrap();
    assert!(!r.pass);
    assert!(r
        .classes
        .iter()
        .all(|c| c.note.as_deref() == Some("tolerance below sampling noise")));
}

#[test]
fn mean_type_is_population_mean_for_any_pool() {
    let pool = ValuedPool::new(vec![0.0, 0.0, 0.1, 5.0, 7.5, 100.0, 3.0, 3.0]).unwrap();
    let mean = pool.values().iter().sum::<f64>() / 8.0;
    let est = monte_carlo_expectation(&pool, MetricTypeClass::MeanType, 0.5, 4_000, 9).unwrap();
    assert!((est.mean - mean).abs() <= 4.0 * est.stderr, "{est:?} vs {mean}");
    for size in 1..8 {
        let exact = exact_expectation(&pool, MetricTypeClass::MeanType, size).unwrap();
        assert!((exact - mean).abs() < 1e-12, "size {size}: {exact}");
    }
}

#[test]
fn enumeration_of_one_to_ten() {
    let pool = one_to(10);
    let rows = verify_enumeration(&pool, 0.5).unwrap();
    let get = |c| rows.iter().find(|r| r.type_class == c).unwrap();
    assert_eq!(get(MetricTypeClass::Additive).exact, 27.5);
    assert_eq!(get(MetricTypeClass::Additive).closed_form, 27.5);
    assert_eq!(get(MetricTypeClass::MeanType).exact, 5.5);
    assert_eq!(get(MetricTypeClass::MeanType).closed_form, 5.5);
    let max = get(MetricTypeClass::MaximumType);
    // E[max of 5 of {1..10}] = 5 * 11 / 6.
    assert!((max.exact - 55.0 / 6.0).abs() < 1e-12);
    assert!((max.closed_form - 8.5).abs() < 1e-12);
    assert_eq!(max.band, 1.0);
    let min = get(MetricTypeClass::MinimumType);
    assert!((min.exact - 11.0 / 6.0).abs() < 1e-12);
    assert!(rows.iter().all(|r| r.pass), "{rows:#?}");
}

#[test]
fn optimal_subset_is_maximal_by_brute_force() {
    let pool = uniform(8, 17).build().unwrap();
    for class in CLASSES {
        let best = subset_metric(&pool, &optimal_subset(&pool, class, 3).unwrap(), class).unwrap();
        let mut top = f64::NEG_INFINITY;
        for a in 0..8 {
            for b in a + 1..8 {
                for c in b + 1..8 {
                    top = top.max(subset_metric(&pool, &[a, b, c], class).unwrap());
                }
            }
        }
        assert_eq!(best, top, "{class:?}");
    }
    assert_eq!(
        subset_metric(
            &one_to(3),
            &optimal_subset(&one_to(3), MetricTypeClass::Additive, 2).unwrap(),
            MetricTypeClass::Additive
        )
        .unwrap(),
        5.0
    );
}

#[test]
fn theorem_additive_and_mean() {
    let pool = uniform(5_000, 4).build().unwrap();
    for class in [MetricTypeClass::Additive, MetricTypeClass::MeanType] {
        let r = theorem_trial(&pool, class, 0.3, SurrogateModel::default(), 100, 8).unwrap();
        assert!(r.win_fraction >= 0.99, "{r:?}");
        assert!(r.mean_gap > 0.0);
        assert!(r.regime.is_none());
    }
}

#[test]
fn lemma_example_closed_forms() {
    assert_eq!(lemma_expectation(MetricTypeClass::Additive, 1.0, 55.0, 10, 0.5), 27.5);
    let v = lemma_expectation(MetricTypeClass::MaximumType, 0.0, 1.0, 10_000, 0.3);
    assert!((v - 0.999667).abs() < 1e-6);
}

#[test]
fn volume_identity_examples() {
    let out = eq1_generate_and_check(&Eq1Config::new(2, 3, 10, 1.0, 1.0, 1)).unwrap();
    assert!(out.pass);
    assert_eq!(out.volume, 60);
    let out = eq1_generate_and_check(&Eq1Config::new(2, 3, 10, 0.5, 1.0, 1)).unwrap();
    assert!(out.pass);
    assert_eq!(out.volume, 30);
    let out = eq1_generate_and_check(&Eq1Config::new(3, 2, 12, 0.75, 0.25, 2)).unwrap();
    assert!(out.pass, "{out:?}");
    assert_eq!(out.volume, 2 * 3 * 2 * 9 * 4);
}

#[test]
fn volume_identity_random_configs() {
    let s = eq1_check_random(200, 2024).unwrap();
    assert_eq!(s.passed, 200, "{:#?}", s.failures);
}

fn levels() -> Vec<f64> {
    vec![0.2, 0.4, 0.6, 0.8]
}

#[test]
fn monotone_volume_sweep_is_high() {
    let pool = uniform(1_000, 5).build().unwrap();
    let sweep = generate_sweep(
        &pool,
        MetricId::Volume,
        MetricTypeClass::Additive,
        SurrogateModel::default(),
        &levels(),
        3,
    )
    .unwrap();
    let fit = fit_sensitivity(&sweep, DEFAULT_RHO_HIGH, DEFAULT_RHO_MOD).unwrap();
    assert_eq!(fit.profile.level(MetricId::Volume), SensitivityLevel::High);

    let flat = generate_sweep(
        &pool,
        MetricId::Volume,
        MetricTypeClass::Additive,
        SurrogateModel::Constant { c: 0.7 },
        &levels(),
        3,
    )
    .unwrap();
    let fit = fit_sensitivity(&flat, DEFAULT_RHO_HIGH, DEFAULT_RHO_MOD).unwrap();
    assert_eq!(fit.profile.level(MetricId::Volume), SensitivityLevel::Low);
}

#[test]
fn shuffled_sweeps_are_mostly_low() {
    let pool = uniform(2_000, 6).build().unwrap();
    let levels: Vec<f64> = (1..=50).map(|i| i as f64 / 50.0).collect();
    let mut low = 0;
    for seed in 0..100u64 {
        let mut sweep = generate_sweep(
            &pool,
            MetricId::Volume,
            MetricTypeClass::Additive,
            SurrogateModel::default(),
            &levels,
            seed,
        )
        .unwrap();
        let mut s = gime_core::rng::Stream::new(seed + 1_000);
        let mut perf: Vec<f64> = sweep.points.iter().map(|p| p.performance).collect();
        for i in (1..perf.len()).rev() {
            perf.swap(i, s.below_usize(i + 1));
        }
        for (p, v) in sweep.points.iter_mut().zip(perf) {
            p.performance = v;
        }
        let fit = fit_sensitivity(&sweep, DEFAULT_RHO_HIGH, DEFAULT_RHO_MOD).unwrap();
        low += usize::from(fit.profile.level(MetricId::Volume) == SensitivityLevel::Low);
    }
    assert!(low >= 95, "{low}/100 Low");
}

#[test]
fn unimodal_duration_sweep_is_not_high() {
    let perf = [0.70, 0.73, 0.75, 0.76, 0.755, 0.74, 0.72, 0.70];
    let points = perf
        .iter()
        .enumerate()
        .map(|(i, &p)| SweepPoint {
            metrics: MetricVector::new().with(MetricId::Duration, (i + 1) as f64),
            performance: p,
            varied_metric: MetricId::Duration,
            tag: format!("months={}", i + 1),
        })
        .collect();
    let fit = fit_sensitivity(&SweepSet::new(points, Merit::HigherBetter), DEFAULT_RHO_HIGH, DEFAULT_RHO_MOD).unwrap();
    assert_ne!(fit.profile.level(MetricId::Duration), SensitivityLevel::High);
}

fn small_pool() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0f64..50.0, 4..=12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn monte_carlo_converges_to_enumeration(values in small_pool(), k in 0.2f64..0.8, seed in any::<u64>()) {
        let pool = ValuedPool::new(values).unwrap();
        let size = (k * pool.len() as f64).floor() as usize;
        prop_assume!(size >= 1 && size < pool.len());
        for class in CLASSES {
            let exact = exact_expectation(&pool, class, size).unwrap();
            let est = monte_carlo_expectation(&pool, class, k, 3_000, seed).unwrap();
            prop_assert!((est.mean - exact).abs() <= 4.0 * est.stderr + 1e-9, "{class:?}: {est:?} vs {exact}");
        }
    }

    #[test]
    fn win_fraction_ignores_monotone_reparameterization(seed in any::<u64>(), a in 0.1f64..10.0, b in -5.0f64..5.0) {
        let pool = uniform(300, seed).build().unwrap();
        let base = theorem_trial(&pool, MetricTypeClass::MeanType, 0.1, SurrogateModel::default(), 100, seed).unwrap();
        let warped = theorem_trial(&pool, MetricTypeClass::MeanType, 0.1, SurrogateModel::Logistic { a, b: b * 0.01 + 0.5 }, 100, seed).unwrap();
        let affine = theorem_trial(&pool, MetricTypeClass::MeanType, 0.1, SurrogateModel::Affine { a, b }, 100, seed).unwrap();
        prop_assert_eq!(base.win_fraction, affine.win_fraction);
        prop_assert_eq!(base.win_fraction, warped.win_fraction);
    }
}
