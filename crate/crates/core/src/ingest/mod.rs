//! Loading, validating and sampling record datasets.
//!
//! Input is RFC 4180 CSV (UTF-8, header row) or JSON Lines. Field kinds come
//! from the manifest schema; timestamps are ISO-8601 or integer epochs scaled
//! by the manifest's `epoch_unit`.

mod dataset;
mod manifest;
mod record;
mod sample;
mod time;

pub use dataset::{load_dataset, DataFormat, Dataset, Row, RowIter};
pub use manifest::{
    has_errors, validate_manifest, DatasetManifest, DurationMode, Issue, MismatchTarget, Severity, TruthMode, TruthReference,
};
pub use record::{parse_json, parse_text, FieldDef, FieldKind, Record, Schema, Value};
pub(crate) use sample::draw_uniform_from;
pub use sample::{draw_uniform, reservoir, reservoir_estimate_sample, DrawMethod, SampleHandle};
pub use time::{format_iso8601, parse_iso8601, TimeQuantity};
