//! Shared domain types: metric identifiers, metric vectors, thresholds,
//! sensitivity profiles and selection reports.

mod metric;
mod per_metric;
mod profile;
mod report;
mod threshold;
mod vector;

pub use metric::{classify_default, Merit, MetricId, MetricTypeClass};
pub use per_metric::{PartialPerMetric, PerMetric};
pub use profile::{Provenance, SensitivityEntry, SensitivityLevel, SensitivityProfile};
pub use report::{
    Action, IterationRecord, PerMetricVerdicts, SelectionReport, Strategy, Timing, Verdict, VerdictStatus, Verdicts,
};
pub use threshold::{Criterion, ThresholdSpec};
pub use vector::MetricVector;

/// Version stamped on every top-level JSON document.
pub const SCHEMA_VERSION: u32 = 1;
