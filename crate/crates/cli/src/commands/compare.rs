use std::time::Instant;

use anyhow::{bail, Result};
use gime_core::model::{Strategy, Timing, SCHEMA_VERSION};
use gime_core::selector::{full_select, gime_select, random_select};
use gime_core::theory::SurrogateModel;
use gime_core::{compute_all, Error, MetricId, MetricVector, Selection, ThresholdSpec};
use serde::Serialize;

use crate::args::{CompareArgs, StrategyArg};
use crate::config::{Run, RunConfig};
use crate::{emit, EXIT_MAX_ITERS, EXIT_OK};

#[derive(Serialize)]
struct RunRow {
    seed: u64,
    subset_size: usize,
    metric_value: f64,
    performance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    accepted: Option<bool>,
    metrics: MetricVector,
}

#[derive(Serialize)]
struct StrategyRow {
    strategy: Strategy,
    performance_mean: f64,
    /// Population standard deviation over runs.
    performance_std: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    iterations_mean: Option<f64>,
    runs: Vec<RunRow>,
}

#[derive(Serialize)]
struct ComparisonReport {
    schema_version: u32,
    dataset_digest: String,
    pool_size: usize,
    subset_size: usize,
    seed: u64,
    repetitions: usize,
    surrogate: SurrogateModel,
    surrogate_metric: MetricId,
    spec: ThresholdSpec,
    pool_metrics: MetricVector,
    strategies: Vec<StrategyRow>,
    timing: Timing,
}

fn row(run_seed: u64, sel: &Selection, metric: MetricId, surrogate: SurrogateModel, gated: bool) -> Result<RunRow> {
    let Some(x) = sel.report.final_metrics.get(metric) else {
        bail!("surrogate metric `{metric}` is absent from the subset metrics");
    };
    Ok(RunRow {
        seed: run_seed,
        subset_size: sel.handle.len(),
        metric_value: x,
        performance: surrogate.eval(x),
        iterations: gated.then_some(sel.report.iterations.len()),
        accepted: gated.then_some(sel.report.accepted),
        metrics: sel.report.final_metrics.clone(),
    })
}

fn summarize(strategy: Strategy, runs: Vec<RunRow>) -> StrategyRow {
    let n = runs.len() as f64;
    let mean = runs.iter().map(|r| r.performance).sum::<f64>() / n;
    let var = runs.iter().map(|r| (r.performance - mean).powi(2)).sum::<f64>() / n;
    let iterations_mean =
        (strategy == Strategy::Gime).then(|| runs.iter().filter_map(|r| r.iterations).sum::<usize>() as f64 / n);
    StrategyRow {
        strategy,
        performance_mean: mean,
        performance_std: var.sqrt(),
        iterations_mean,
        runs,
    }
}

fn gated(run: &Run, seed: u64) -> Result<Selection> {
    let mut opts = run.options.clone();
    opts.seed = seed;
    match gime_select(&run.dataset, &run.manifest, &run.spec, &opts) {
        Ok(s) => Ok(s),
        Err(Error::MaxItersExceeded { best, .. }) => Ok(*best),
        Err(e) => Err(e.into()),
    }
}

pub fn compare(args: &CompareArgs) -> Result<u8> {
    if args.repetitions == 0 {
        bail!("--repetitions must be at least 1");
    }
    if args.strategies.is_empty() {
        bail!("no strategies given");
    }
    let start = Instant::now();
    let run = RunConfig::merged(&args.run)?.resolve()?;
    let pool_size = run.dataset.record_count();
    let size = run.options.target_volume.resolve(pool_size)?;
    let pool_metrics = compute_all(&run.dataset, &run.manifest)?;
    let base = run.options.seed;
    let seeds: Vec<u64> = (0..args.repetitions as u64).map(|r| base.wrapping_add(r)).collect();
    let (metric, surrogate) = (args.surrogate_metric, args.surrogate);

    let mut strategies = Vec::new();
    let mut all_accepted = true;
    let mut seen = Vec::new();
    for &s in &args.strategies {
        if seen.contains(&s) {
            continue;
        }
        seen.push(s);
        let (strategy, runs) = match s {
            StrategyArg::Gime => {
                let mut runs = Vec::new();
                for &seed in &seeds {
                    let sel = gated(&run, seed)?;
                    all_accepted &= sel.report.accepted;
                    runs.push(row(seed, &sel, metric, surrogate, true)?);
                }
                (Strategy::Gime, runs)
            }
            StrategyArg::Random => {
                let mut runs = Vec::new();
                for &seed in &seeds {
                    let sel = random_select(&run.dataset, &run.manifest, size, seed)?;
                    runs.push(row(seed, &sel, metric, surrogate, false)?);
                }
                (Strategy::Random, runs)
            }
            StrategyArg::Full => {
                let sel = full_select(&run.dataset, &run.manifest)?;
                (Strategy::Full, vec![row(base, &sel, metric, surrogate, false)?])
            }
        };
        strategies.push(summarize(strategy, runs));
    }

    let report = ComparisonReport {
        schema_version: SCHEMA_VERSION,
        dataset_digest: run.dataset.content_digest().to_owned(),
        pool_size,
        subset_size: size,
        seed: base,
        repetitions: args.repetitions,
        surrogate,
        surrogate_metric: metric,
        spec: run.spec.clone(),
        pool_metrics,
        strategies,
        timing: Timing {
            wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        },
    };
    emit(&report, run.output_dir.as_ref().map(|d| d.join("comparison.json")).as_deref())?;
    Ok(if all_accepted { EXIT_OK } else { EXIT_MAX_ITERS })
}
