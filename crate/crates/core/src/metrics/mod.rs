//! Single-pass computation of the eleven metrics.
//!
//! Every metric is folded into a [`PartialMetricState`]; states built over
//! disjoint record ranges merge into the state of their union, so the same
//! code serves streaming, chunked-parallel and subset evaluation.

mod sketch;
mod state;

use rayon::prelude::*;
use serde::Serialize;

pub use sketch::{stable_hash, DistinctSet, HyperLogLog};
pub use state::{Finalized, MetricContext, PartialMetricState};

use crate::error::Result;
use crate::ingest::{Dataset, DatasetManifest, Record};
use crate::model::{MetricId, MetricVector, PerMetric};

#[derive(Clone, Debug, Default)]
pub struct MetricsOptions {
    /// Restrict computation to these metrics; others are left absent.
    pub only: Option<Vec<MetricId>>,
    /// HyperLogLog precision for scope/variety; `None` counts exactly.
    pub sketch_precision: Option<u8>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricProvenance {
    pub bindings: Vec<String>,
    pub records_scanned: u64,
    pub estimated: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MetricsOutcome {
    pub metrics: MetricVector,
    pub warnings: Vec<String>,
    pub provenance: PerMetric<MetricProvenance>,
}

/// Reusable evaluator bound to one manifest.
#[derive(Clone, Debug)]
pub struct MetricsEngine {
    ctx: MetricContext,
}

impl MetricsEngine {
    pub fn new(manifest: &DatasetManifest) -> Result<Self> {
        Self::with_options(manifest, &MetricsOptions::default())
    }

    pub fn with_options(manifest: &DatasetManifest, opts: &MetricsOptions) -> Result<Self> {
        Ok(MetricsEngine {
            ctx: MetricContext::new(manifest, opts.only.as_deref(), opts.sketch_precision)?,
        })
    }

    pub fn context(&self) -> &MetricContext {
        &self.ctx
    }

    pub fn empty_state(&self) -> PartialMetricState {
        PartialMetricState::new(&self.ctx)
    }

    /// Streams every record of `dataset` into one state.
    pub fn state_of(&self, dataset: &Dataset) -> Result<PartialMetricState> {
        let mut st = self.empty_state();
        for row in dataset.rows()? {
            let row = row?;
            st.accumulate(&self.ctx, row.line, &row.record)?;
        }
        Ok(st)
    }

    /// State over in-memory records; `line` in errors is the 1-based position.
    pub fn state_of_records<'r>(&self, records: impl IntoIterator<Item = &'r Record>) -> Result<PartialMetricState> {
        let mut st = self.empty_state();
        for (i, r) in records.into_iter().enumerate() {
            st.accumulate(&self.ctx, i as u64 + 1, r)?;
        }
        Ok(st)
    }

    pub fn finalize(&self, state: &PartialMetricState) -> Result<Finalized> {
        state.finalize(&self.ctx)
    }

    pub fn compute(&self, dataset: &Dataset) -> Result<MetricVector> {
        Ok(self.finalize(&self.state_of(dataset)?)?.metrics)
    }

    pub fn compute_records(&self, records: &[Record]) -> Result<MetricVector> {
        Ok(self.finalize(&self.state_of_records(records)?)?.metrics)
    }

    /// Metrics of the records at `indices` (into `records`).
    pub fn compute_indices(&self, records: &[Record], indices: &[usize]) -> Result<MetricVector> {
        let mut st = self.empty_state();
        for &i in indices {
            st.accumulate(&self.ctx, i as u64 + 1, &records[i])?;
        }
        Ok(self.finalize(&st)?.metrics)
    }

    /// Splits `records` into `chunks` contiguous ranges, folds them on the
    /// rayon pool and merges the partial states in range order.
    pub fn compute_parallel(&self, records: &[Record], chunks: usize) -> Result<MetricVector> {
        let chunks = chunks.max(1);
        let size = records.len().div_ceil(chunks).max(1);
        let states: Vec<PartialMetricState> = records
            .par_chunks(size)
            .enumerate()
            .map(|(c, chunk)| {
                let mut st = self.empty_state();
                for (i, r) in chunk.iter().enumerate() {
                    st.accumulate(&self.ctx, (c * size + i) as u64 + 1, r)?;
                }
                Ok(st)
            })
            .collect::<Result<_>>()?;
        let mut total = self.empty_state();
        for st in states {
            total.merge(st)?;
        }
        Ok(self.finalize(&total)?.metrics)
    }

    /// Finalizes with warnings and per-metric provenance.
    pub fn outcome(&self, state: &PartialMetricState, estimated: bool) -> Result<MetricsOutcome> {
        let fin = self.finalize(state)?;
        let scanned = state.record_count();
        let provenance = PerMetric::from_fn(|m| {
            let present = fin.metrics.get(m).is_some();
            let note = fin.notes[m].clone().or_else(|| {
                if present {
                    None
                } else if !self.ctx.is_enabled(m) {
                    Some("not requested".into())
                } else if self.ctx.bindings(m).is_empty()
                    || (m == MetricId::SamplingRate && !has_role(self.ctx.bindings(m), "nominal_sampling_interval"))
                {
                    Some("required binding absent".into())
                } else if scanned == 0 {
                    Some("empty dataset".into())
                } else {
                    Some("required binding absent".into())
                }
            });
            MetricProvenance {
                bindings: self.ctx.bindings(m).to_vec(),
                records_scanned: scanned,
                estimated: estimated && present && m != MetricId::Volume,
                note,
            }
        });
        Ok(MetricsOutcome {
            metrics: fin.metrics,
            warnings: fin.warnings,
            provenance,
        })
    }
}

fn has_role(bindings: &[String], role: &str) -> bool {
    bindings.iter().any(|b| b.starts_with(role))
}

/// Every computable metric of `dataset` in one pass.
pub fn compute_all(dataset: &Dataset, manifest: &DatasetManifest) -> Result<MetricVector> {
    MetricsEngine::new(manifest)?.compute(dataset)
}

/// Like [`compute_all`] with options, warnings and provenance.
pub fn compute_all_detailed(dataset: &Dataset, manifest: &DatasetManifest, opts: &MetricsOptions) -> Result<MetricsOutcome> {
    let engine = MetricsEngine::with_options(manifest, opts)?;
    let state = engine.state_of(dataset)?;
    let mut out = engine.outcome(&state, false)?;
    let mut warnings = dataset.warnings().to_vec();
    warnings.append(&mut out.warnings);
    out.warnings = warnings;
    Ok(out)
}

/// Concatenates partial states: `a` absorbs `b`.
pub fn merge_partials(mut a: PartialMetricState, b: PartialMetricState) -> Result<PartialMetricState> {
    a.merge(b)?;
    Ok(a)
}

fn single(dataset: &Dataset, manifest: &DatasetManifest, metric: MetricId) -> Result<Option<f64>> {
    let opts = MetricsOptions {
        only: Some(vec![metric]),
        sketch_precision: None,
    };
    Ok(MetricsEngine::with_options(manifest, &opts)?.compute(dataset)?.get(metric))
}

pub fn compute_volume(dataset: &Dataset) -> u64 {
    dataset.record_count() as u64
}

pub fn compute_delay(dataset: &Dataset, manifest: &DatasetManifest) -> Result<f64> {
    Ok(single(dataset, manifest, MetricId::Delay)?.unwrap_or(0.0))
}

pub fn compute_scope(dataset: &Dataset, manifest: &DatasetManifest) -> Result<Option<u64>> {
    Ok(single(dataset, manifest, MetricId::Scope)?.map(|v| v as u64))
}

pub fn compute_granularity(dataset: &Dataset, manifest: &DatasetManifest) -> Result<Option<f64>> {
    single(dataset, manifest, MetricId::Granularity)
}

pub fn compute_variety(dataset: &Dataset, manifest: &DatasetManifest) -> Result<Option<u64>> {
    Ok(single(dataset, manifest, MetricId::Variety)?.map(|v| v as u64))
}

pub fn compute_duration(dataset: &Dataset, manifest: &DatasetManifest) -> Result<Option<f64>> {
    single(dataset, manifest, MetricId::Duration)
}

pub fn compute_sampling_rate(dataset: &Dataset, manifest: &DatasetManifest) -> Result<Option<f64>> {
    single(dataset, manifest, MetricId::SamplingRate)
}

pub fn compute_aggregation(dataset: &Dataset, manifest: &DatasetManifest) -> Result<Option<f64>> {
    single(dataset, manifest, MetricId::Aggregation)
}

pub fn compute_coverage(dataset: &Dataset, manifest: &DatasetManifest) -> Result<Option<f64>> {
    single(dataset, manifest, MetricId::Coverage)
}

pub fn compute_distortion(dataset: &Dataset, manifest: &DatasetManifest) -> Result<Option<f64>> {
    single(dataset, manifest, MetricId::Distortion)
}

pub fn compute_mismatch(dataset: &Dataset, manifest: &DatasetManifest) -> Result<Option<f64>> {
    single(dataset, manifest, MetricId::Mismatch)
}
