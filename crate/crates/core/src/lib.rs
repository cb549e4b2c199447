// `!(x > 0.0)` is used on purpose so NaN lands on the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fixtures;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod selector;
pub mod sensitivity;
pub mod theory;

pub use error::{Error, Result};
pub use ingest::{DataFormat, Dataset, DatasetManifest, Record, SampleHandle, Schema, Value};
pub use metrics::{compute_all, MetricsEngine};
pub use model::{Criterion, Merit, MetricId, MetricTypeClass, MetricVector, SensitivityLevel, SensitivityProfile, ThresholdSpec};
pub use selector::{gime_select, random_select, Selection, SelectionOptions};
pub use sensitivity::{derive_thresholds, fit_sensitivity, SweepSet, ThresholdPolicy};
