//! Threshold-gated subset selection and the random/full baselines.

mod repair;

use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use repair::{repair_candidate, Repairer};

use crate::error::{Error, Result};
use crate::ingest::{draw_uniform_from, reservoir_estimate_sample, Dataset, DatasetManifest, Record, SampleHandle};
use crate::metrics::MetricsEngine;
use crate::model::{
    Action, Criterion, IterationRecord, Merit, MetricId, MetricVector, PerMetric, SelectionReport, Strategy, ThresholdSpec,
    Timing, Verdict, VerdictStatus, Verdicts, SCHEMA_VERSION,
};
use crate::rng::Stream;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetVolume {
    Count(usize),
    /// Fraction of the pool, rounded to the nearest record.
    Fraction(f64),
}

impl TargetVolume {
    pub fn resolve(self, pool: usize) -> Result<usize> {
        let n = match self {
            TargetVolume::Count(n) => n,
            TargetVolume::Fraction(f) => {
                if !(f > 0.0 && f <= 1.0) {
                    return Err(Error::invalid(format!("target fraction {f} must lie in (0, 1]")));
                }
                ((f * pool as f64).round() as usize).max(1)
            }
        };
        if n == 0 {
            return Err(Error::invalid("target volume must be positive"));
        }
        if n > pool {
            return Err(Error::SizeExceedsPool {
                requested: n,
                available: pool,
            });
        }
        Ok(n)
    }

    /// Target implied by the volume criterion: the lower bound of `AtLeast`,
    /// the midpoint of `Range`, the bound of `AtMost`, else the whole pool.
    pub fn from_spec(spec: &ThresholdSpec, pool: usize) -> TargetVolume {
        let n = match spec.criterion(MetricId::Volume) {
            Criterion::AtLeast(x) => x.ceil(),
            Criterion::Range { lo, hi } => ((lo + hi) / 2.0).round().clamp(lo.ceil(), hi.floor().max(lo.ceil())),
            Criterion::AtMost(x) => x.floor(),
            Criterion::EqualPoolOptimal { .. } | Criterion::Ignore => pool as f64,
        };
        TargetVolume::Count(n.clamp(0.0, pool as f64) as usize)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Redraw,
    #[default]
    RedrawWithRepair,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionOptions {
    pub target_volume: TargetVolume,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub mode: Mode,
    /// Estimate pool metrics from a reservoir sample instead of a full pass.
    #[serde(default)]
    pub estimate_pool: bool,
    #[serde(default = "default_estimate_size")]
    pub estimate_sample_size: usize,
}

pub const DEFAULT_MAX_ITERS: usize = 100;

fn default_max_iters() -> usize {
    DEFAULT_MAX_ITERS
}

fn default_estimate_size() -> usize {
    10_000
}

impl SelectionOptions {
    pub fn new(target_volume: TargetVolume, seed: u64) -> Self {
        SelectionOptions {
            target_volume,
            seed,
            max_iters: DEFAULT_MAX_ITERS,
            mode: Mode::default(),
            estimate_pool: false,
            estimate_sample_size: default_estimate_size(),
        }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_max_iters(mut self, n: usize) -> Self {
        self.max_iters = n;
        self
    }
}

/// A chosen subset and the account of how it was chosen.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub handle: SampleHandle,
    pub report: SelectionReport,
}

fn verdict(status: VerdictStatus, distance: Option<f64>, reason: Option<String>) -> Verdict {
    Verdict {
        status,
        distance,
        reason,
    }
}

fn bound_check(value: f64, lo: f64, hi: f64) -> Verdict {
    let d = (lo - value).max(value - hi).max(0.0);
    if d > 0.0 {
        verdict(VerdictStatus::Fail, Some(d), Some(format!("{value} outside [{lo}, {hi}]")))
    } else {
        verdict(VerdictStatus::Pass, Some(0.0), None)
    }
}

/// Pass region `[lo, hi]` of a criterion, given the pool value.
/// `Ok(None)` for Ignore; `Err` when the pool value is needed but absent.
pub fn pass_region(c: Criterion, merit: Merit, pool: Option<f64>) -> std::result::Result<Option<(f64, f64)>, String> {
    Ok(Some(match c {
        Criterion::Ignore => return Ok(None),
        Criterion::AtLeast(x) => (x, f64::INFINITY),
        Criterion::AtMost(x) => (f64::NEG_INFINITY, x),
        Criterion::Range { lo, hi } => (lo, hi),
        Criterion::EqualPoolOptimal { tolerance } => {
            let p = pool.ok_or_else(|| "pool value absent".to_owned())?;
            match merit {
                Merit::HigherBetter => (p - tolerance, f64::INFINITY),
                Merit::LowerBetter => (f64::NEG_INFINITY, p + tolerance),
            }
        }
    }))
}

/// Checks `metrics` against `spec`. Pool-optimal criteria compare with
/// `pool` in the metric's merit direction.
pub fn evaluate_thresholds(metrics: &MetricVector, spec: &ThresholdSpec, pool: &MetricVector) -> Verdicts {
    let per = PerMetric::from_fn(|m| {
        let region = match pass_region(spec.criterion(m), spec.merit(m), pool.get(m)) {
            Ok(None) => return Verdict::ignored(),
            Ok(Some(r)) => r,
            Err(reason) => return verdict(VerdictStatus::Fail, None, Some(reason)),
        };
        match metrics.get(m) {
            None => verdict(VerdictStatus::Fail, None, Some("metric absent".into())),
            Some(v) => bound_check(v, region.0, region.1),
        }
    });
    let pass = per.iter().all(|(_, v)| !v.failed());
    Verdicts { pass, metrics: per }
}

/// Metrics whose subset value can never exceed the pool value.
fn subset_bounded_above(m: MetricId) -> bool {
    matches!(
        m,
        MetricId::Volume | MetricId::Scope | MetricId::Variety | MetricId::Coverage | MetricId::Duration | MetricId::Delay
    )
}

fn unit_interval(m: MetricId) -> bool {
    matches!(m, MetricId::Coverage | MetricId::Mismatch | MetricId::Aggregation)
}

/// Rejects criteria that no subset of the pool can meet.
pub fn check_feasibility(pool: &MetricVector, spec: &ThresholdSpec) -> Result<()> {
    let mut reasons = Vec::new();
    for (m, c) in spec.active() {
        let Some(p) = pool.get(m) else {
            reasons.push(format!("{m}: pool value is absent"));
            continue;
        };
        let Ok(Some((lo, hi))) = pass_region(c, spec.merit(m), Some(p)) else {
            continue;
        };
        if subset_bounded_above(m) && lo > p {
            reasons.push(format!("{m}: requires at least {lo} but the pool has {p}"));
        }
        if hi < 0.0 {
            reasons.push(format!("{m}: requires at most {hi} but values are non-negative"));
        }
        if unit_interval(m) && lo > 1.0 {
            reasons.push(format!("{m}: requires at least {lo} but values are at most 1"));
        }
        if lo > hi {
            reasons.push(format!("{m}: empty range [{lo}, {hi}]"));
        }
    }
    if reasons.is_empty() {
        Ok(())
    } else {
        Err(Error::Infeasible { reasons })
    }
}

/// Pool metrics, exact or from a reservoir sample (volume stays exact).
pub fn pool_metrics(pool: &Dataset, engine: &MetricsEngine, opts: &SelectionOptions) -> Result<(MetricVector, bool)> {
    if opts.estimate_pool && opts.estimate_sample_size < pool.record_count() {
        let (_, sample) = reservoir_estimate_sample(pool, opts.estimate_sample_size, opts.seed)?;
        let mut v = engine.compute_records(&sample)?;
        v.set(MetricId::Volume, Some(pool.record_count() as f64));
        Ok((v, true))
    } else {
        Ok((engine.compute(pool)?, false))
    }
}

#[derive(Serialize)]
struct DigestInput<'a> {
    strategy: Strategy,
    dataset: &'a str,
    manifest: &'a DatasetManifest,
    spec: Option<&'a ThresholdSpec>,
    options: Option<&'a SelectionOptions>,
    size: usize,
}

fn config_digest(
    strategy: Strategy,
    pool: &Dataset,
    manifest: &DatasetManifest,
    spec: Option<&ThresholdSpec>,
    opts: Option<&SelectionOptions>,
    size: usize,
) -> Result<String> {
    let bytes = serde_json::to_vec(&DigestInput {
        strategy,
        dataset: pool.content_digest(),
        manifest,
        spec,
        options: opts,
        size,
    })?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

struct Best {
    failures: usize,
    distance: f64,
    indices: Vec<usize>,
    metrics: MetricVector,
}

fn total_distance(v: &Verdicts) -> f64 {
    v.metrics.iter().map(|(_, x)| x.distance.unwrap_or(f64::INFINITY)).sum()
}

/// Draws candidates until one passes `spec`.
///
/// Iteration `i` uses `substream(seed, i)`. A failing candidate is either
/// discarded (`Redraw`) or repaired by size-preserving swaps and re-evaluated
/// in the next iteration (`RedrawWithRepair`); when no improving swap exists
/// the next iteration redraws. On exhaustion the error carries the
/// best candidate seen.
pub fn gime_select(
    pool: &Dataset,
    manifest: &DatasetManifest,
    spec: &ThresholdSpec,
    opts: &SelectionOptions,
) -> Result<Selection> {
    let start = Instant::now();
    spec.validate()?;
    if opts.max_iters == 0 {
        return Err(Error::invalid("max_iters must be at least 1"));
    }
    let total = pool.record_count();
    let n = opts.target_volume.resolve(total)?;
    let engine = MetricsEngine::new(manifest)?;
    let (pool_vec, estimated) = pool_metrics(pool, &engine, opts)?;
    check_feasibility(&pool_vec, spec)?;
    let size_check = evaluate_thresholds(&MetricVector::new().with(MetricId::Volume, n as f64), spec, &pool_vec);
    if size_check.metrics[MetricId::Volume].failed() {
        return Err(Error::Infeasible {
            reasons: vec![format!("volume: target size {n} violates the volume criterion")],
        });
    }

    let records: Vec<Record> = pool.materialize()?;
    let repairer = Repairer::new(&records, manifest, spec, &pool_vec, &engine)?;
    let digest = config_digest(Strategy::Gime, pool, manifest, Some(spec), Some(opts), n)?;
    let mut warnings = pool.warnings().to_vec();
    if estimated {
        warnings.push(format!(
            "pool metrics estimated from a reservoir sample of {} records",
            opts.estimate_sample_size
        ));
    }

    let mut iterations = Vec::new();
    let mut pending: Option<Vec<usize>> = None;
    let mut best: Option<Best> = None;
    for i in 0..opts.max_iters {
        let mut stream = Stream::substream(opts.seed, i as u64);
        let indices = match pending.take() {
            Some(ix) => ix,
            None => draw_uniform_from(total, n, &mut stream, opts.seed)?.into_indices(),
        };
        let metrics = engine.compute_indices(&records, &indices)?;
        let verdicts = evaluate_thresholds(&metrics, spec, &pool_vec);
        if verdicts.pass {
            iterations.push(IterationRecord {
                index: i,
                candidate_size: indices.len(),
                candidate_metrics: metrics.clone(),
                verdicts,
                action: Action::Accept,
            });
            let handle = SampleHandle::new(indices, opts.seed, draw_method(&iterations));
            return Ok(Selection {
                report: SelectionReport {
                    schema_version: SCHEMA_VERSION,
                    strategy: Strategy::Gime,
                    accepted: true,
                    seed: opts.seed,
                    subset_size: handle.len(),
                    pool_estimated: estimated,
                    pool_metrics: pool_vec,
                    final_metrics: metrics,
                    iterations,
                    config_digest: digest,
                    warnings,
                    timing: Timing {
                        wall_time_ms: elapsed_ms(start),
                    },
                },
                handle,
            });
        }

        let failures = verdicts.failure_count();
        let distance = total_distance(&verdicts);
        if best.as_ref().is_none_or(|b| (failures, distance) < (b.failures, b.distance)) {
            best = Some(Best {
                failures,
                distance,
                indices: indices.clone(),
                metrics: metrics.clone(),
            });
        }

        let mut action = Action::Redraw;
        if opts.mode == Mode::RedrawWithRepair && i + 1 < opts.max_iters {
            match repairer.repair(&indices, &verdicts, &mut stream) {
                Ok(repaired) => {
                    pending = Some(repaired);
                    action = Action::Repair;
                }
                Err(Error::RepairStalled) => {}
                Err(e) => return Err(e),
            }
        }
        iterations.push(IterationRecord {
            index: i,
            candidate_size: indices.len(),
            candidate_metrics: metrics,
            verdicts,
            action,
        });
    }

    let best = best.expect("at least one iteration ran");
    let handle = SampleHandle::new(best.indices, opts.seed, crate::ingest::DrawMethod::UniformWithoutReplacement);
    let report = SelectionReport {
        schema_version: SCHEMA_VERSION,
        strategy: Strategy::Gime,
        accepted: false,
        seed: opts.seed,
        subset_size: handle.len(),
        pool_estimated: estimated,
        pool_metrics: pool_vec,
        final_metrics: best.metrics,
        iterations,
        config_digest: digest,
        warnings,
        timing: Timing {
            wall_time_ms: elapsed_ms(start),
        },
    };
    Err(Error::MaxItersExceeded {
        iterations: opts.max_iters,
        best: Box::new(Selection { handle, report }),
    })
}

fn draw_method(iterations: &[IterationRecord]) -> crate::ingest::DrawMethod {
    let repaired = iterations.len() >= 2 && iterations[iterations.len() - 2].action == Action::Repair;
    if repaired {
        crate::ingest::DrawMethod::Repaired
    } else {
        crate::ingest::DrawMethod::UniformWithoutReplacement
    }
}

fn baseline(
    pool: &Dataset,
    manifest: &DatasetManifest,
    handle: SampleHandle,
    strategy: Strategy,
    start: Instant,
) -> Result<Selection> {
    let engine = MetricsEngine::new(manifest)?;
    let records = pool.materialize()?;
    let pool_vec = engine.compute_records(&records)?;
    let metrics = if handle.len() == records.len() {
        pool_vec.clone()
    } else {
        engine.compute_indices(&records, handle.indices())?
    };
    let mut warnings = pool.warnings().to_vec();
    if handle.is_empty() {
        warnings.push("selected subset is empty".into());
    }
    let verdicts = evaluate_thresholds(&metrics, &ThresholdSpec::ignore_all(), &pool_vec);
    Ok(Selection {
        report: SelectionReport {
            schema_version: SCHEMA_VERSION,
            strategy,
            accepted: true,
            seed: handle.seed(),
            subset_size: handle.len(),
            pool_estimated: false,
            pool_metrics: pool_vec,
            final_metrics: metrics.clone(),
            iterations: vec![IterationRecord {
                index: 0,
                candidate_size: handle.len(),
                candidate_metrics: metrics,
                verdicts,
                action: Action::Accept,
            }],
            config_digest: config_digest(strategy, pool, manifest, None, None, handle.len())?,
            warnings,
            timing: Timing {
                wall_time_ms: elapsed_ms(start),
            },
        },
        handle,
    })
}

/// One uniform draw of `n` records, no gate.
pub fn random_select(pool: &Dataset, manifest: &DatasetManifest, n: usize, seed: u64) -> Result<Selection> {
    let start = Instant::now();
    let handle = draw_uniform_from(pool.record_count(), n, &mut Stream::new(seed), seed)?;
    baseline(pool, manifest, handle, Strategy::Random, start)
}

/// The whole pool.
pub fn full_select(pool: &Dataset, manifest: &DatasetManifest) -> Result<Selection> {
    let start = Instant::now();
    baseline(pool, manifest, SampleHandle::full(pool.record_count()), Strategy::Full, start)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pool() -> MetricVector {
        MetricVector::new()
            .with(MetricId::Volume, 1000.0)
            .with(MetricId::Delay, 0.0)
            .with(MetricId::Variety, 100.0)
            .with(MetricId::Mismatch, 0.0)
    }

    #[test]
    fn pool_passes_pool_optimal() {
        let mut spec = ThresholdSpec::ignore_all();
        for m in [MetricId::Volume, MetricId::Delay, MetricId::Variety, MetricId::Mismatch] {
            spec.set(m, Criterion::EqualPoolOptimal { tolerance: 0.0 });
        }
        assert!(evaluate_thresholds(&pool(), &spec, &pool()).pass);
    }

    #[test]
    fn volume_range_fails_alone() {
        let spec = ThresholdSpec::ignore_all().with(MetricId::Volume, Criterion::Range { lo: 250.0, hi: 750.0 });
        let cand = pool().with(MetricId::Volume, 200.0);
        let v = evaluate_thresholds(&cand, &spec, &pool());
        assert!(!v.pass);
        assert_eq!(v.failing().collect::<Vec<_>>(), vec![MetricId::Volume]);
        assert_eq!(v.metrics[MetricId::Volume].distance, Some(50.0));
    }

    #[test]
    fn ignore_all_always_passes() {
        assert!(evaluate_thresholds(&MetricVector::new(), &ThresholdSpec::ignore_all(), &MetricVector::new()).pass);
    }

    #[test]
    fn absent_metric_fails_with_reason() {
        let spec = ThresholdSpec::ignore_all().with(MetricId::Scope, Criterion::AtLeast(1.0));
        let v = evaluate_thresholds(&pool(), &spec, &pool());
        assert!(!v.pass);
        assert_eq!(v.metrics[MetricId::Scope].distance, None);
    }

    #[test]
    fn lower_better_optimum_is_one_sided() {
        let spec = ThresholdSpec::ignore_all().with(MetricId::Delay, Criterion::EqualPoolOptimal { tolerance: 0.5 });
        let p = pool().with(MetricId::Delay, 2.0);
        assert!(evaluate_thresholds(&p.clone().with(MetricId::Delay, 1.0), &spec, &p).pass);
        assert!(evaluate_thresholds(&p.clone().with(MetricId::Delay, 2.5), &spec, &p).pass);
        assert!(!evaluate_thresholds(&p.clone().with(MetricId::Delay, 2.6), &spec, &p).pass);
    }

    #[test]
    fn feasibility() {
        let ok = ThresholdSpec::ignore_all().with(MetricId::Variety, Criterion::EqualPoolOptimal { tolerance: 0.0 });
        assert!(check_feasibility(&pool(), &ok).is_ok());
        let too_many = ThresholdSpec::ignore_all().with(MetricId::Variety, Criterion::AtLeast(101.0));
        assert!(matches!(check_feasibility(&pool(), &too_many), Err(Error::Infeasible { .. })));
        let big = ThresholdSpec::ignore_all().with(MetricId::Volume, Criterion::AtLeast(1200.0));
        assert!(check_feasibility(&pool(), &big).is_err());
        let absent = ThresholdSpec::ignore_all().with(MetricId::Scope, Criterion::AtMost(3.0));
        assert!(check_feasibility(&pool(), &absent).is_err());
        let neg = ThresholdSpec::ignore_all().with(MetricId::Mismatch, Criterion::AtMost(-0.1));
        assert!(check_feasibility(&pool(), &neg).is_err());
    }

    #[test]
    fn target_from_spec() {
        let s = ThresholdSpec::ignore_all().with(MetricId::Volume, Criterion::AtLeast(6000.0));
        assert_eq!(TargetVolume::from_spec(&s, 10_000), TargetVolume::Count(6000));
        let s = ThresholdSpec::ignore_all().with(MetricId::Volume, Criterion::Range { lo: 250.0, hi: 750.0 });
        assert_eq!(TargetVolume::from_spec(&s, 1000), TargetVolume::Count(500));
        assert_eq!(
            TargetVolume::from_spec(&ThresholdSpec::ignore_all(), 17),
            TargetVolume::Count(17)
        );
        assert_eq!(TargetVolume::Fraction(0.3).resolve(10).unwrap(), 3);
        assert!(TargetVolume::Count(11).resolve(10).is_err());
    }
}
