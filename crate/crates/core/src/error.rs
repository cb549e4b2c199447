use std::path::PathBuf;

use crate::model::MetricId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("invalid manifest: {0}")]
    InvalidManifest(String),

    #[error("missing field `{field}` in data source")]
    MissingField { field: String },

    #[error("type error at line {line}, field `{field}`: {message}")]
    TypeError { line: u64, field: String, message: String },

    #[error("duplicate record id `{id}` at line {line}")]
    DuplicateRecordId { id: String, line: u64 },

    #[error("requested sample of {requested} records exceeds pool of {available}")]
    SizeExceedsPool { requested: usize, available: usize },

    #[error("negative delay at line {line}: collection time precedes event time")]
    NegativeDelay { line: u64 },

    #[error("non-positive granularity {value} at line {line}")]
    NonPositiveGranularity { line: u64, value: f64 },

    #[error("label `{label}` at line {line} is outside the target distribution")]
    UnknownLabel { label: String, line: u64 },

    #[error("{unmatched} of {total} records have no truth-reference match (limit 5%)")]
    JoinKeyMiss { unmatched: u64, total: u64 },

    #[error("sweep group `{metric}` has constant metric values")]
    DegenerateSweep { metric: MetricId },

    #[error("sweep group `{metric}` varies more than its own metric: {detail}")]
    ConfoundedSweep { metric: MetricId, detail: String },

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("pool metric `{0}` is absent but required by its sensitivity level")]
    MissingPoolMetric(MetricId),

    #[error("threshold spec is infeasible for this pool: {}", reasons.join("; "))]
    Infeasible { reasons: Vec<String> },

    /// Carries the best candidate seen, flagged not accepted.
    #[error("no candidate passed the thresholds within {iterations} iterations")]
    MaxItersExceeded {
        iterations: usize,
        best: Box<crate::selector::Selection>,
    },

    #[error("subset is empty")]
    EmptySubset,

    #[error("parameters do not produce an integral volume: {0}")]
    NonIntegralVolume(String),

    #[error("sweep level {level} for `{metric}` is not reachable from this pool")]
    UnreachableLevel { metric: MetricId, level: f64 },

    #[error("partial states were built under different manifests")]
    ManifestMismatch,

    #[error("no improving swap exists for the failing metrics")]
    RepairStalled,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
