use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::record::{FieldKind, Schema};
use super::time::TimeQuantity;
use super::DataFormat;
use crate::error::{Error, Result};
use crate::model::{MetricId, SCHEMA_VERSION};

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DurationMode {
    /// max(event_time) - min(event_time).
    #[default]
    Span,
    /// Number of occupied buckets times the bucket size. Buckets are aligned
    /// to the Unix epoch.
    BucketUnion { bucket_size: TimeQuantity },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MismatchTarget {
    /// Target rate of `positive_label`; mismatch is |observed rate - rate|.
    Binary {
        #[serde(default = "default_positive")]
        positive_label: String,
        rate: f64,
    },
    /// Target label distribution; mismatch is the total variation distance.
    Categorical(BTreeMap<String, f64>),
}

fn default_positive() -> String {
    "1".to_owned()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthMode {
    /// Fraction of joined records whose value differs from the reference.
    #[default]
    Categorical,
    /// Mean of |value - reference| / range(reference).
    Numeric,
}

/// Reference copy of a field used to measure distortion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthReference {
    /// Relative paths resolve against the manifest's directory.
    pub path: PathBuf,
    #[serde(default)]
    pub format: Option<DataFormat>,
    /// Field in the reference file holding record ids.
    pub join_key: String,
    /// Field compared in the dataset.
    pub compare_field: String,
    /// Field compared in the reference file; defaults to `compare_field`.
    #[serde(default)]
    pub reference_field: Option<String>,
    #[serde(default)]
    pub mode: TruthMode,
}

/// Binds dataset fields to the roles the metrics read.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub schema: Schema,
    pub record_id_field: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_time_field: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collection_time_field: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scope_field: Option<String>,
    /// Externally known scope, used when no field can express it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scope_constant: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variety_field: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_list: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub granularity_field: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub granularity_constant: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggregation_field: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage_field: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage_universe: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distortion_field: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_reference: Option<TruthReference>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_field: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mismatch_target: Option<MismatchTarget>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nominal_sampling_interval: Option<TimeQuantity>,
    pub time_unit: TimeQuantity,
    /// Unit of integer epoch timestamps.
    #[serde(default = "one_second")]
    pub epoch_unit: TimeQuantity,
    #[serde(default)]
    pub duration_mode: DurationMode,
    #[serde(skip)]
    base_dir: Option<PathBuf>,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

fn one_second() -> TimeQuantity {
    TimeQuantity::seconds(1.0)
}

impl DatasetManifest {
    /// Minimal manifest: schema, id field and time unit, nothing else bound.
    pub fn new(schema: Schema, record_id_field: impl Into<String>, time_unit: TimeQuantity) -> Self {
        DatasetManifest {
            schema_version: SCHEMA_VERSION,
            schema,
            record_id_field: record_id_field.into(),
            event_time_field: None,
            collection_time_field: None,
            scope_field: None,
            scope_constant: None,
            variety_field: None,
            feature_list: None,
            granularity_field: None,
            granularity_constant: None,
            aggregation_field: None,
            coverage_field: None,
            coverage_universe: None,
            distortion_field: None,
            truth_reference: None,
            label_field: None,
            mismatch_target: None,
            nominal_sampling_interval: None,
            time_unit,
            epoch_unit: one_second(),
            duration_mode: DurationMode::Span,
            base_dir: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: DatasetManifest = serde_json::from_str(text)?;
        if m.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidManifest(format!(
                "unsupported schema_version {}",
                m.schema_version
            )));
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut m = Self::from_json(&text)?;
        m.base_dir = path.parent().map(Path::to_path_buf);
        Ok(m)
    }

    pub fn with_base_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.base_dir = Some(dir.into());
        self
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(base) if p.is_relative() => base.join(p),
            _ => p.to_path_buf(),
        }
    }

    /// Label of the manifest time unit, attached to metric vectors.
    pub fn time_unit_label(&self) -> String {
        self.time_unit.to_string()
    }

    /// Fields referenced by any binding, with the kinds each accepts.
    fn bindings(&self) -> Vec<(&'static str, &str, &'static [FieldKind])> {
        use FieldKind::*;
        const KEYS: &[FieldKind] = &[Text, Integer, Boolean];
        const TIMES: &[FieldKind] = &[Timestamp];
        const NUMS: &[FieldKind] = &[Integer, Real];
        const FLAGS: &[FieldKind] = &[Boolean, Integer, Real];
        const ANY: &[FieldKind] = &[Text, Integer, Real, Timestamp, Boolean];

        let mut out = vec![("record_id_field", self.record_id_field.as_str(), &[Text, Integer][..])];
        let optional: [(&'static str, &Option<String>, &'static [FieldKind]); 9] = [
            ("event_time_field", &self.event_time_field, TIMES),
            ("collection_time_field", &self.collection_time_field, TIMES),
            ("scope_field", &self.scope_field, KEYS),
            ("variety_field", &self.variety_field, KEYS),
            ("granularity_field", &self.granularity_field, NUMS),
            ("aggregation_field", &self.aggregation_field, KEYS),
            ("coverage_field", &self.coverage_field, KEYS),
            ("distortion_field", &self.distortion_field, FLAGS),
            ("label_field", &self.label_field, KEYS),
        ];
        for (role, field, kinds) in optional {
            if let Some(f) = field {
                out.push((role, f.as_str(), kinds));
            }
        }
        if let Some(features) = &self.feature_list {
            for f in features {
                out.push(("feature_list", f.as_str(), ANY));
            }
        }
        if let Some(t) = &self.truth_reference {
            out.push(("truth_reference.compare_field", t.compare_field.as_str(), ANY));
        }
        out
    }

    /// Fields that must be present in every data source read with this manifest.
    pub fn bound_fields(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.bindings().into_iter().map(|(_, f, _)| f).collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Issue {
    pub severity: Severity,
    pub message: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub disabled: Vec<MetricId>,
}

impl Issue {
    fn error(message: impl Into<String>) -> Self {
        Issue {
            severity: Severity::Error,
            message: message.into(),
            disabled: Vec::new(),
        }
    }

    fn warning(message: impl Into<String>, disabled: &[MetricId]) -> Self {
        Issue {
            severity: Severity::Warning,
            message: message.into(),
            disabled: disabled.to_vec(),
        }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}: {}", self.message)
    }
}

/// Checks every binding against `schema`. An empty list means every metric is
/// computable; warnings name metrics disabled by missing optional bindings.
pub fn validate_manifest(m: &DatasetManifest, schema: &Schema) -> Vec<Issue> {
    let mut issues = Vec::new();

    let mut names: Vec<&str> = schema.fields().iter().map(|f| f.name.as_str()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        issues.push(Issue::error("schema contains duplicate field names"));
    }

    for (role, field, kinds) in m.bindings() {
        match schema.get(field) {
            None => issues.push(Issue::error(format!("{role} `{field}` is not in the schema"))),
            Some(def) if !kinds.contains(&def.kind) => issues.push(Issue::error(format!(
                "{role} `{field}` has kind {} but must be one of {}",
                def.kind,
                kinds.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
            ))),
            Some(_) => {}
        }
    }

    if !m.time_unit.is_positive() {
        issues.push(Issue::error(format!("time_unit {} must be positive", m.time_unit)));
    }
    if !m.epoch_unit.is_positive() {
        issues.push(Issue::error(format!("epoch_unit {} must be positive", m.epoch_unit)));
    }
    if let DurationMode::BucketUnion { bucket_size } = &m.duration_mode {
        if !bucket_size.is_positive() {
            issues.push(Issue::error(format!("bucket_size {bucket_size} must be positive")));
        }
    }
    if let Some(q) = &m.nominal_sampling_interval {
        if !q.is_positive() {
            issues.push(Issue::error(format!("nominal_sampling_interval {q} must be positive")));
        }
    }

    let exclusive = [
        (
            "scope_field",
            m.scope_field.is_some(),
            "scope_constant",
            m.scope_constant.is_some(),
        ),
        (
            "variety_field",
            m.variety_field.is_some(),
            "feature_list",
            m.feature_list.is_some(),
        ),
        (
            "granularity_field",
            m.granularity_field.is_some(),
            "granularity_constant",
            m.granularity_constant.is_some(),
        ),
        (
            "distortion_field",
            m.distortion_field.is_some(),
            "truth_reference",
            m.truth_reference.is_some(),
        ),
    ];
    for (a, has_a, b, has_b) in exclusive {
        if has_a && has_b {
            issues.push(Issue::error(format!("{a} and {b} are mutually exclusive")));
        }
    }

    if let Some(g) = m.granularity_constant {
        if !(g > 0.0 && g.is_finite()) {
            issues.push(Issue::error(format!("granularity_constant {g} must be positive")));
        }
    }
    if let Some(f) = &m.feature_list {
        if f.is_empty() {
            issues.push(Issue::error("feature_list is empty"));
        }
    }
    match (&m.coverage_field, &m.coverage_universe) {
        (_, Some(u)) if u.is_empty() => issues.push(Issue::error("coverage_universe is empty")),
        (Some(_), None) => issues.push(Issue::warning(
            "coverage_field bound without coverage_universe; coverage disabled",
            &[MetricId::Coverage],
        )),
        (None, Some(_)) => issues.push(Issue::error("coverage_universe given without coverage_field")),
        _ => {}
    }

    match &m.mismatch_target {
        Some(MismatchTarget::Binary { rate, .. }) => {
            if !(0.0..=1.0).contains(rate) {
                issues.push(Issue::error(format!(
                    "binary mismatch_target rate {rate} is not a probability"
                )));
            }
        }
        Some(MismatchTarget::Categorical(dist)) => {
            let total: f64 = dist.values().sum();
            if dist.is_empty() || dist.values().any(|p| !(0.0..=1.0).contains(p)) || (total - 1.0).abs() > 1e-9 {
                issues.push(Issue::error(format!(
                    "categorical mismatch_target must be a distribution summing to 1 (sum = {total})"
                )));
            }
        }
        None => {}
    }
    if m.mismatch_target.is_some() && m.label_field.is_none() {
        issues.push(Issue::error("mismatch_target given without label_field"));
    }

    // Missing optional bindings disable metrics.
    if m.event_time_field.is_none() {
        issues.push(Issue::warning(
            "no event_time_field: delay defaults to 0; duration/sampling_rate disabled",
            &[MetricId::Duration, MetricId::SamplingRate],
        ));
    } else {
        if m.collection_time_field.is_none() {
            issues.push(Issue::warning("no collection_time_field: delay defaults to 0", &[]));
        }
        if m.nominal_sampling_interval.is_none() {
            issues.push(Issue::warning(
                "no nominal_sampling_interval: sampling_rate disabled",
                &[MetricId::SamplingRate],
            ));
        }
    }
    let disabled = [
        (
            m.scope_field.is_none() && m.scope_constant.is_none(),
            "scope_field",
            MetricId::Scope,
        ),
        (
            m.variety_field.is_none() && m.feature_list.is_none(),
            "variety_field",
            MetricId::Variety,
        ),
        (
            m.granularity_field.is_none() && m.granularity_constant.is_none(),
            "granularity_field",
            MetricId::Granularity,
        ),
        (m.aggregation_field.is_none(), "aggregation_field", MetricId::Aggregation),
        (
            m.coverage_field.is_none() && m.coverage_universe.is_none(),
            "coverage_field",
            MetricId::Coverage,
        ),
        (
            m.distortion_field.is_none() && m.truth_reference.is_none(),
            "distortion_field",
            MetricId::Distortion,
        ),
        (
            m.label_field.is_none() || m.mismatch_target.is_none(),
            "label_field/mismatch_target",
            MetricId::Mismatch,
        ),
    ];
    for (missing, binding, metric) in disabled {
        if missing {
            issues.push(Issue::warning(format!("no {binding}: {metric} disabled"), &[metric]));
        }
    }
    issues
}

pub fn has_errors(issues: &[Issue]) -> bool {
    issues.iter().any(|i| i.severity == Severity::Error)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::record::FieldDef;

    pub(crate) fn full_manifest() -> DatasetManifest {
        use FieldKind::*;
        let schema = Schema::new(vec![
            FieldDef::new("id", Text),
            FieldDef::new("event", Timestamp),
            FieldDef::new("collected", Timestamp),
            FieldDef::new("region", Text),
            FieldDef::new("kind", Text),
            FieldDef::new("res", Real),
            FieldDef::new("shard", Integer),
            FieldDef::new("area", Text),
            FieldDef::new("bad", Boolean),
            FieldDef::new("label", Integer),
        ]);
        let mut m = DatasetManifest::new(schema, "id", TimeQuantity::days(1.0));
        m.event_time_field = Some("event".into());
        m.collection_time_field = Some("collected".into());
        m.scope_field = Some("region".into());
        m.variety_field = Some("kind".into());
        m.granularity_field = Some("res".into());
        m.aggregation_field = Some("shard".into());
        m.coverage_field = Some("area".into());
        m.coverage_universe = Some(vec!["a".into(), "b".into()]);
        m.distortion_field = Some("bad".into());
        m.label_field = Some("label".into());
        m.mismatch_target = Some(MismatchTarget::Binary {
            positive_label: "1".into(),
            rate: 0.5,
        });
        m.nominal_sampling_interval = Some(TimeQuantity::days(1.0));
        m
    }

    #[test]
    fn fully_bound_manifest_has_no_issues() {
        let m = full_manifest();
        assert_eq!(validate_manifest(&m, &m.schema), vec![]);
    }

    #[test]
    fn missing_event_time_warns() {
        let mut m = full_manifest();
        m.event_time_field = None;
        let issues = validate_manifest(&m, &m.schema);
        assert_eq!(issues.len(), 1, "{issues:?}");
        assert_eq!(issues[0].severity, Severity::Warning);
        assert!(issues[0]
            .message
            .contains("delay defaults to 0; duration/sampling_rate disabled"));
        assert_eq!(issues[0].disabled, vec![MetricId::Duration, MetricId::SamplingRate]);
    }

    #[test]
    fn real_label_with_binary_target_is_error() {
        let mut m = full_manifest();
        m.label_field = Some("res".into());
        let issues = validate_manifest(&m, &m.schema);
        assert!(has_errors(&issues));
        assert!(issues.iter().any(|i| i.message.contains("label_field `res` has kind real")));
    }

    #[test]
    fn distribution_must_sum_to_one() {
        let mut m = full_manifest();
        m.mismatch_target = Some(MismatchTarget::Categorical(
            [("a".to_string(), 0.5), ("b".to_string(), 0.4)].into(),
        ));
        assert!(has_errors(&validate_manifest(&m, &m.schema)));
        m.mismatch_target = Some(MismatchTarget::Categorical(
            [("a".to_string(), 0.5), ("b".to_string(), 0.5)].into(),
        ));
        assert!(!has_errors(&validate_manifest(&m, &m.schema)));
    }

    #[test]
    fn unknown_field_and_exclusive_bindings() {
        let mut m = full_manifest();
        m.scope_field = Some("province".into());
        m.scope_constant = Some(4);
        let issues = validate_manifest(&m, &m.schema);
        assert!(issues.iter().any(|i| i.message.contains("`province` is not in the schema")));
        assert!(issues.iter().any(|i| i.message.contains("mutually exclusive")));
    }

    #[test]
    fn manifest_json_round_trip() {
        let m = full_manifest();
        let json = serde_json::to_string(&m).unwrap();
        let back = DatasetManifest::from_json(&json).unwrap();
        assert_eq!(back, m);
        assert!(DatasetManifest::from_json(r#"{"schema":[],"record_id_field":"id","time_unit":"1d","bogus":1}"#).is_err());
    }
}
