use anyhow::Result;
use gime_core::ingest::reservoir_estimate_sample;
use gime_core::metrics::{compute_all_detailed, MetricProvenance, MetricsEngine, MetricsOptions};
use gime_core::model::{PerMetric, SCHEMA_VERSION};
use gime_core::{MetricId, MetricVector};
use serde::Serialize;

use crate::args::MetricsArgs;
use crate::config::{load_data, load_manifest};
use crate::{emit, EXIT_OK};

#[derive(Serialize)]
struct MetricsReport {
    schema_version: u32,
    records: usize,
    dataset_digest: String,
    /// True when every metric except volume comes from a sample.
    estimated: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    sample_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    metrics: MetricVector,
    warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    provenance: Option<PerMetric<MetricProvenance>>,
}

pub fn metrics(args: &MetricsArgs) -> Result<u8> {
    let manifest = load_manifest(&args.manifest)?;
    let dataset = load_data(&args.data, args.format, &manifest)?;
    let count = dataset.record_count();
    let (outcome, sample_size) = match args.sample {
        None => (compute_all_detailed(&dataset, &manifest, &MetricsOptions::default())?, None),
        Some(n) => {
            let engine = MetricsEngine::new(&manifest)?;
            let (_, records) = reservoir_estimate_sample(&dataset, n, args.seed)?;
            let mut out = engine.outcome(&engine.state_of_records(&records)?, true)?;
            // Volume is exact: the index already counted every record.
            out.metrics.set(MetricId::Volume, Some(count as f64));
            out.provenance[MetricId::Volume].records_scanned = count as u64;
            out.provenance[MetricId::Volume].note = Some("pool record count".into());
            let mut warnings = dataset.warnings().to_vec();
            warnings.append(&mut out.warnings);
            out.warnings = warnings;
            (out, Some(records.len()))
        }
    };
    let report = MetricsReport {
        schema_version: SCHEMA_VERSION,
        records: count,
        dataset_digest: dataset.content_digest().to_owned(),
        estimated: sample_size.is_some(),
        sample_size,
        seed: sample_size.map(|_| args.seed),
        metrics: outcome.metrics,
        warnings: outcome.warnings,
        provenance: args.explain.then_some(outcome.provenance),
    };
    emit(&report, args.out.as_deref())?;
    Ok(EXIT_OK)
}
