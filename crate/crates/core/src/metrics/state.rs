use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};

use serde::Serialize;

use super::sketch::{stable_hash, DistinctSet};
use crate::error::{Error, Result};
use crate::ingest::{DataFormat, DatasetManifest, DurationMode, MismatchTarget, Record, TruthMode, Value};
use crate::model::{MetricId, MetricVector, PerMetric};

/// Where per-record distortion comes from.
#[derive(Clone, Debug)]
enum DistortionSource {
    Field(usize),
    Truth {
        compare: usize,
        reference: HashMap<String, String>,
        mode: TruthMode,
        /// Range of numeric reference values; normalizes deviations.
        range: f64,
    },
}

/// Field positions and parameters resolved from a manifest.
#[derive(Clone, Debug)]
pub struct MetricContext {
    enabled: [bool; MetricId::COUNT],
    id: usize,
    event: Option<usize>,
    collection: Option<usize>,
    scope: Option<usize>,
    scope_constant: Option<u64>,
    variety: Option<usize>,
    feature_count: Option<usize>,
    granularity: Option<usize>,
    granularity_constant: Option<f64>,
    aggregation: Option<usize>,
    coverage: Option<(usize, BTreeSet<String>)>,
    distortion: Option<DistortionSource>,
    label: Option<(usize, MismatchTarget)>,
    nominal_interval: Option<f64>,
    time_unit: f64,
    time_unit_label: String,
    bucket: Option<f64>,
    sketch_precision: Option<u8>,
    bindings: PerMetric<Vec<String>>,
    fingerprint: u64,
}

impl MetricContext {
    pub fn new(m: &DatasetManifest, only: Option<&[MetricId]>, sketch_precision: Option<u8>) -> Result<Self> {
        let pos = |name: &Option<String>| -> Result<Option<usize>> {
            match name {
                None => Ok(None),
                Some(n) => m
                    .schema
                    .position(n)
                    .map(Some)
                    .ok_or_else(|| Error::MissingField { field: n.clone() }),
            }
        };
        let mut enabled = [true; MetricId::COUNT];
        if let Some(only) = only {
            for mid in MetricId::ALL {
                enabled[mid.index()] = only.contains(&mid);
            }
        }
        let coverage = match (pos(&m.coverage_field)?, &m.coverage_universe) {
            (Some(idx), Some(universe)) => Some((idx, universe.iter().cloned().collect())),
            _ => None,
        };
        let distortion = if let Some(idx) = pos(&m.distortion_field)? {
            Some(DistortionSource::Field(idx))
        } else if let (Some(t), true) = (&m.truth_reference, enabled[MetricId::Distortion.index()]) {
            let compare = pos(&Some(t.compare_field.clone()))?.expect("bound");
            let reference_field = t.reference_field.clone().unwrap_or_else(|| t.compare_field.clone());
            let path = m.resolve(&t.path);
            let format = t
                .format
                .or_else(|| DataFormat::from_path(&path))
                .ok_or_else(|| Error::invalid(format!("cannot infer format of {}", path.display())))?;
            let reference = load_reference(&path, format, &t.join_key, &reference_field)?;
            let range = if t.mode == TruthMode::Numeric {
                let nums: Vec<f64> = reference
                    .values()
                    .map(|v| {
                        v.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::invalid(format!("reference value `{v}` is not numeric")))
                    })
                    .collect::<Result<_>>()?;
                let lo = nums.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = nums.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if hi > lo {
                    hi - lo
                } else {
                    1.0
                }
            } else {
                1.0
            };
            Some(DistortionSource::Truth {
                compare,
                reference,
                mode: t.mode,
                range,
            })
        } else {
            None
        };
        let label = match (pos(&m.label_field)?, &m.mismatch_target) {
            (Some(idx), Some(t)) => Some((idx, t.clone())),
            _ => None,
        };

        let mut bindings: PerMetric<Vec<String>> = PerMetric::default();
        let mut bind = |mid: MetricId, what: String| bindings[mid].push(what);
        bind(MetricId::Volume, format!("record_id_field={}", m.record_id_field));
        for (mid, role, field) in [
            (MetricId::Delay, "event_time_field", &m.event_time_field),
            (MetricId::Delay, "collection_time_field", &m.collection_time_field),
            (MetricId::Scope, "scope_field", &m.scope_field),
            (MetricId::Variety, "variety_field", &m.variety_field),
            (MetricId::Granularity, "granularity_field", &m.granularity_field),
            (MetricId::Duration, "event_time_field", &m.event_time_field),
            (MetricId::SamplingRate, "event_time_field", &m.event_time_field),
            (MetricId::SamplingRate, "scope_field", &m.scope_field),
            (MetricId::Aggregation, "aggregation_field", &m.aggregation_field),
            (MetricId::Coverage, "coverage_field", &m.coverage_field),
            (MetricId::Distortion, "distortion_field", &m.distortion_field),
            (MetricId::Mismatch, "label_field", &m.label_field),
        ] {
            if let Some(f) = field {
                bind(mid, format!("{role}={f}"));
            }
        }
        if let Some(c) = m.scope_constant {
            bind(MetricId::Scope, format!("scope_constant={c}"));
        }
        if let Some(f) = &m.feature_list {
            bind(MetricId::Variety, format!("feature_list=[{}]", f.join(",")));
        }
        if let Some(g) = m.granularity_constant {
            bind(MetricId::Granularity, format!("granularity_constant={g}"));
        }
        if let Some(q) = &m.nominal_sampling_interval {
            bind(MetricId::SamplingRate, format!("nominal_sampling_interval={q}"));
        }
        if let Some(t) = &m.truth_reference {
            bind(MetricId::Distortion, format!("truth_reference={}", t.path.display()));
        }
        if let DurationMode::BucketUnion { bucket_size } = &m.duration_mode {
            bind(MetricId::Duration, format!("bucket_union={bucket_size}"));
        }

        Ok(MetricContext {
            enabled,
            id: m.schema.position(&m.record_id_field).ok_or_else(|| Error::MissingField {
                field: m.record_id_field.clone(),
            })?,
            event: pos(&m.event_time_field)?,
            collection: pos(&m.collection_time_field)?,
            scope: pos(&m.scope_field)?,
            scope_constant: m.scope_constant,
            variety: pos(&m.variety_field)?,
            feature_count: m.feature_list.as_ref().map(Vec::len),
            granularity: pos(&m.granularity_field)?,
            granularity_constant: m.granularity_constant,
            aggregation: pos(&m.aggregation_field)?,
            coverage,
            distortion,
            label,
            nominal_interval: m.nominal_sampling_interval.as_ref().map(|q| q.as_seconds()),
            time_unit: m.time_unit.as_seconds(),
            time_unit_label: m.time_unit_label(),
            bucket: match &m.duration_mode {
                DurationMode::Span => None,
                DurationMode::BucketUnion { bucket_size } => Some(bucket_size.as_seconds()),
            },
            sketch_precision,
            bindings,
            fingerprint: fingerprint(m, &enabled, sketch_precision)?,
        })
    }

    #[inline]
    fn on(&self, m: MetricId) -> bool {
        self.enabled[m.index()]
    }

    pub fn bindings(&self, m: MetricId) -> &[String] {
        &self.bindings[m]
    }

    pub fn uses_sketch(&self) -> bool {
        self.sketch_precision.is_some()
    }

    pub fn is_enabled(&self, m: MetricId) -> bool {
        self.on(m)
    }
}

fn fingerprint(m: &DatasetManifest, enabled: &[bool], sketch: Option<u8>) -> Result<u64> {
    let mut bytes = serde_json::to_vec(m)?;
    bytes.extend(enabled.iter().map(|&b| u8::from(b)));
    bytes.push(sketch.unwrap_or(0));
    Ok(stable_hash(&bytes))
}

fn load_reference(path: &std::path::Path, format: DataFormat, join_key: &str, field: &str) -> Result<HashMap<String, String>> {
    let mut out = HashMap::new();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    match format {
        DataFormat::Csv => {
            let mut rdr = csv::Reader::from_reader(BufReader::new(file));
            let headers = rdr.headers()?.clone();
            let col = |name: &str| {
                headers
                    .iter()
                    .position(|h| h == name)
                    .ok_or_else(|| Error::MissingField { field: name.to_owned() })
            };
            let (k, v) = (col(join_key)?, col(field)?);
            for rec in rdr.records() {
                let rec = rec?;
                out.insert(rec.get(k).unwrap_or("").to_owned(), rec.get(v).unwrap_or("").to_owned());
            }
        }
        DataFormat::Jsonl => {
            let text = |v: &serde_json::Value| match v {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Null => String::new(),
                other => other.to_string(),
            };
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| Error::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let obj: serde_json::Value = serde_json::from_str(&line).map_err(|e| Error::TypeError {
                    line: i as u64 + 1,
                    field: String::new(),
                    message: format!("invalid JSON in truth reference: {e}"),
                })?;
                let key = obj.get(join_key).ok_or_else(|| Error::MissingField {
                    field: join_key.to_owned(),
                })?;
                let val = obj.get(field).map(text).unwrap_or_default();
                out.insert(text(key), val);
            }
        }
    }
    Ok(out)
}

/// Mergeable accumulator for all eleven metrics.
///
/// `merge` is associative and commutative. Counts, sets, minima and maxima
/// merge exactly; sums of reals merge up to floating-point reassociation.
#[derive(Clone, Debug)]
pub struct PartialMetricState {
    fingerprint: u64,
    records: u64,
    max_delay: Option<i64>,
    scope: DistinctSet,
    variety: DistinctSet,
    event_min: Option<i64>,
    event_max: Option<i64>,
    buckets: BTreeSet<i64>,
    granularity_sum: f64,
    granularity_n: u64,
    partitions: HashMap<String, u64>,
    covered: BTreeSet<String>,
    outside_universe: BTreeMap<String, u64>,
    distortion_sum: f64,
    distortion_n: u64,
    truth_unmatched: u64,
    labels: BTreeMap<String, u64>,
    /// Distinct observation instants per sampling group.
    groups: BTreeMap<String, BTreeSet<i64>>,
}

fn required<'r>(record: &'r Record, idx: usize, line: u64, what: &str) -> Result<&'r Value> {
    let v = record.get(idx);
    if v.is_null() {
        return Err(Error::TypeError {
            line,
            field: what.to_owned(),
            message: "missing value in a bound field".into(),
        });
    }
    Ok(v)
}

fn timestamp(record: &Record, idx: usize, line: u64, what: &str) -> Result<i64> {
    required(record, idx, line, what)?
        .as_timestamp()
        .ok_or_else(|| Error::TypeError {
            line,
            field: what.to_owned(),
            message: "expected a timestamp".into(),
        })
}

impl PartialMetricState {
    pub fn new(ctx: &MetricContext) -> Self {
        PartialMetricState {
            fingerprint: ctx.fingerprint,
            records: 0,
            max_delay: None,
            scope: DistinctSet::new(ctx.sketch_precision),
            variety: DistinctSet::new(ctx.sketch_precision),
            event_min: None,
            event_max: None,
            buckets: BTreeSet::new(),
            granularity_sum: 0.0,
            granularity_n: 0,
            partitions: HashMap::new(),
            covered: BTreeSet::new(),
            outside_universe: BTreeMap::new(),
            distortion_sum: 0.0,
            distortion_n: 0,
            truth_unmatched: 0,
            labels: BTreeMap::new(),
            groups: BTreeMap::new(),
        }
    }

    pub fn record_count(&self) -> u64 {
        self.records
    }

    /// Folds one record into the state. `line` is cited in errors.
    pub fn accumulate(&mut self, ctx: &MetricContext, line: u64, record: &Record) -> Result<()> {
        use MetricId as M;
        self.records += 1;

        let needs_event = ctx.on(M::Delay) || ctx.on(M::Duration) || ctx.on(M::SamplingRate);
        let event = match ctx.event {
            Some(idx) if needs_event => Some(timestamp(record, idx, line, "event_time_field")?),
            _ => None,
        };

        if ctx.on(M::Delay) {
            if let (Some(ev), Some(idx)) = (event, ctx.collection) {
                let col = timestamp(record, idx, line, "collection_time_field")?;
                if col < ev {
                    return Err(Error::NegativeDelay { line });
                }
                let lag = col - ev;
                self.max_delay = Some(self.max_delay.map_or(lag, |d| d.max(lag)));
            }
        }

        if let Some(ev) = event {
            self.event_min = Some(self.event_min.map_or(ev, |x| x.min(ev)));
            self.event_max = Some(self.event_max.map_or(ev, |x| x.max(ev)));
            if let (true, Some(size)) = (ctx.on(M::Duration), ctx.bucket) {
                self.buckets.insert((ev as f64 / size).floor() as i64);
            }
        }

        if ctx.on(M::Scope) {
            if let Some(idx) = ctx.scope {
                self.scope.insert(&required(record, idx, line, "scope_field")?.key());
            }
        }

        if let (true, Some(ev), Some(_)) = (ctx.on(M::SamplingRate), event, ctx.nominal_interval) {
            let group = match ctx.scope {
                Some(idx) => required(record, idx, line, "scope_field")?.key().into_owned(),
                None => String::new(),
            };
            self.groups.entry(group).or_default().insert(ev);
        }

        if ctx.on(M::Variety) {
            if let Some(idx) = ctx.variety {
                self.variety.insert(&required(record, idx, line, "variety_field")?.key());
            }
        }

        if ctx.on(M::Granularity) {
            if let Some(idx) = ctx.granularity {
                let g = required(record, idx, line, "granularity_field")?.as_f64().unwrap_or(f64::NAN);
                if !(g > 0.0) {
                    return Err(Error::NonPositiveGranularity { line, value: g });
                }
                self.granularity_sum += g;
                self.granularity_n += 1;
            }
        }

        if ctx.on(M::Aggregation) {
            if let Some(idx) = ctx.aggregation {
                let key = required(record, idx, line, "aggregation_field")?.key();
                match self.partitions.get_mut(key.as_ref()) {
                    Some(c) => *c += 1,
                    None => {
                        self.partitions.insert(key.into_owned(), 1);
                    }
                }
            }
        }

        if ctx.on(M::Coverage) {
            if let Some((idx, universe)) = &ctx.coverage {
                let v = record.get(*idx);
                if !v.is_null() {
                    let key = v.key();
                    if universe.contains(key.as_ref()) {
                        if !self.covered.contains(key.as_ref()) {
                            self.covered.insert(key.into_owned());
                        }
                    } else {
                        *self.outside_universe.entry(key.into_owned()).or_insert(0) += 1;
                    }
                }
            }
        }

        if ctx.on(M::Distortion) {
            match &ctx.distortion {
                Some(DistortionSource::Field(idx)) => {
                    let e = required(record, *idx, line, "distortion_field")?.as_f64().unwrap_or(f64::NAN);
                    if !(e >= 0.0) {
                        return Err(Error::TypeError {
                            line,
                            field: "distortion_field".into(),
                            message: format!("distortion value {e} must be >= 0"),
                        });
                    }
                    self.distortion_sum += e;
                    self.distortion_n += 1;
                }
                Some(DistortionSource::Truth {
                    compare,
                    reference,
                    mode,
                    range,
                }) => {
                    let id = record.get(ctx.id).key();
                    match reference.get(id.as_ref()) {
                        None => self.truth_unmatched += 1,
                        Some(truth) => {
                            let observed = record.get(*compare);
                            let err = match mode {
                                TruthMode::Categorical => {
                                    if observed.key() == truth.as_str() {
                                        0.0
                                    } else {
                                        1.0
                                    }
                                }
                                TruthMode::Numeric => {
                                    let x = observed.as_f64().ok_or_else(|| Error::TypeError {
                                        line,
                                        field: "truth_reference.compare_field".into(),
                                        message: "expected a numeric value".into(),
                                    })?;
                                    let t: f64 = truth
                                        .trim()
                                        .parse()
                                        .map_err(|_| Error::invalid(format!("reference value `{truth}` is not numeric")))?;
                                    (x - t).abs() / range
                                }
                            };
                            self.distortion_sum += err;
                            self.distortion_n += 1;
                        }
                    }
                }
                None => {}
            }
        }

        if ctx.on(M::Mismatch) {
            if let Some((idx, target)) = &ctx.label {
                let key = required(record, *idx, line, "label_field")?.key();
                if let MismatchTarget::Categorical(dist) = target {
                    if !dist.contains_key(key.as_ref()) {
                        return Err(Error::UnknownLabel {
                            label: key.into_owned(),
                            line,
                        });
                    }
                }
                match self.labels.get_mut(key.as_ref()) {
                    Some(c) => *c += 1,
                    None => {
                        self.labels.insert(key.into_owned(), 1);
                    }
                }
            }
        }
        Ok(())
    }

    /// Fails with `ManifestMismatch` when the states come from different contexts.
    pub fn merge(&mut self, other: PartialMetricState) -> Result<()> {
        if self.fingerprint != other.fingerprint {
            return Err(Error::ManifestMismatch);
        }
        self.records += other.records;
        self.max_delay = match (self.max_delay, other.max_delay) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        self.scope.merge(other.scope);
        self.variety.merge(other.variety);
        self.event_min = match (self.event_min, other.event_min) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        self.event_max = match (self.event_max, other.event_max) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        self.buckets.extend(other.buckets);
        self.granularity_sum += other.granularity_sum;
        self.granularity_n += other.granularity_n;
        for (k, c) in other.partitions {
            *self.partitions.entry(k).or_insert(0) += c;
        }
        self.covered.extend(other.covered);
        for (k, c) in other.outside_universe {
            *self.outside_universe.entry(k).or_insert(0) += c;
        }
        self.distortion_sum += other.distortion_sum;
        self.distortion_n += other.distortion_n;
        self.truth_unmatched += other.truth_unmatched;
        for (k, c) in other.labels {
            *self.labels.entry(k).or_insert(0) += c;
        }
        for (k, g) in other.groups {
            self.groups.entry(k).or_default().extend(g);
        }
        Ok(())
    }

    /// Turns the accumulated state into metric values.
    pub fn finalize(&self, ctx: &MetricContext) -> Result<Finalized> {
        use MetricId as M;
        let mut v = MetricVector::new().with_time_unit(ctx.time_unit_label.clone());
        let mut warnings = Vec::new();
        let mut notes: PerMetric<Option<String>> = PerMetric::default();
        let n = self.records;

        if ctx.on(M::Volume) {
            v.set(M::Volume, Some(n as f64));
        }
        if ctx.on(M::Delay) {
            let delay = match (ctx.event, ctx.collection) {
                (Some(_), Some(_)) => self.max_delay.map_or(0.0, |d| d as f64 / ctx.time_unit),
                _ => {
                    notes[M::Delay] = Some("assumed zero delay".into());
                    0.0
                }
            };
            v.set(M::Delay, Some(delay));
        }
        if ctx.on(M::Duration) && ctx.event.is_some() {
            let d = if n == 0 {
                0.0
            } else if let Some(size) = ctx.bucket {
                self.buckets.len() as f64 * size / ctx.time_unit
            } else {
                (self.event_max.unwrap_or(0) - self.event_min.unwrap_or(0)) as f64 / ctx.time_unit
            };
            v.set(M::Duration, Some(d));
        }
        if n == 0 {
            return Ok(Finalized {
                metrics: v,
                warnings,
                notes,
            });
        }

        if ctx.on(M::Scope) {
            if ctx.scope.is_some() {
                v.set(M::Scope, Some(self.scope.count() as f64));
                if self.scope.is_estimate() {
                    notes[M::Scope] = Some("sketch estimate".into());
                }
            } else if let Some(c) = ctx.scope_constant {
                v.set(M::Scope, Some(c as f64));
                notes[M::Scope] = Some("manifest constant".into());
            }
        }
        if ctx.on(M::Granularity) {
            if ctx.granularity.is_some() && self.granularity_n > 0 {
                v.set(M::Granularity, Some(self.granularity_sum / self.granularity_n as f64));
            } else if let Some(g) = ctx.granularity_constant {
                v.set(M::Granularity, Some(g));
            }
        }
        if ctx.on(M::Variety) {
            if ctx.variety.is_some() {
                v.set(M::Variety, Some(self.variety.count() as f64));
                if self.variety.is_estimate() {
                    notes[M::Variety] = Some("sketch estimate".into());
                }
            } else if let Some(k) = ctx.feature_count {
                v.set(M::Variety, Some(k as f64));
                notes[M::Variety] = Some("feature_list length".into());
            }
        }
        if ctx.on(M::SamplingRate) && ctx.event.is_some() {
            if let Some(interval) = ctx.nominal_interval {
                let mut total = 0.0;
                let mut short = 0usize;
                for g in self.groups.values() {
                    let (lo, hi) = (*g.first().expect("non-empty"), *g.last().expect("non-empty"));
                    let span = (hi - lo) as f64;
                    if span < interval {
                        short += 1;
                        total += 1.0;
                    } else {
                        total += (g.len() - 1) as f64 * interval / span;
                    }
                }
                if short > 0 {
                    warnings.push(format!(
                        "sampling_rate: {short} group(s) span less than one nominal interval; rate taken as 1.0 (ZeroSpan)"
                    ));
                }
                if !self.groups.is_empty() {
                    v.set(M::SamplingRate, Some(total / self.groups.len() as f64));
                }
            }
        }
        if ctx.on(M::Aggregation) && ctx.aggregation.is_some() {
            let sum_sq: u128 = self.partitions.values().map(|&c| u128::from(c) * u128::from(c)).sum();
            let total = u128::from(n) * u128::from(n);
            v.set(M::Aggregation, Some(sum_sq as f64 / total as f64));
        }
        if ctx.on(M::Coverage) {
            if let Some((_, universe)) = &ctx.coverage {
                v.set(M::Coverage, Some(self.covered.len() as f64 / universe.len() as f64));
                if !self.outside_universe.is_empty() {
                    let shown: Vec<&str> = self.outside_universe.keys().take(10).map(String::as_str).collect();
                    warnings.push(format!(
                        "coverage: {} value(s) outside the universe excluded (ValueOutsideUniverse): {}",
                        self.outside_universe.len(),
                        shown.join(", ")
                    ));
                }
            }
        }
        if ctx.on(M::Distortion) {
            match &ctx.distortion {
                Some(DistortionSource::Field(_)) => {
                    v.set(M::Distortion, Some(self.distortion_sum / self.distortion_n as f64));
                }
                Some(DistortionSource::Truth { .. }) => {
                    if self.truth_unmatched * 20 > n {
                        return Err(Error::JoinKeyMiss {
                            unmatched: self.truth_unmatched,
                            total: n,
                        });
                    }
                    if self.truth_unmatched > 0 {
                        warnings.push(format!(
                            "distortion: {} of {n} records have no truth-reference match",
                            self.truth_unmatched
                        ));
                    }
                    if self.distortion_n > 0 {
                        v.set(M::Distortion, Some(self.distortion_sum / self.distortion_n as f64));
                    }
                }
                None => {}
            }
        }
        if ctx.on(M::Mismatch) {
            if let Some((_, target)) = &ctx.label {
                let nf = n as f64;
                let value = match target {
                    MismatchTarget::Binary { positive_label, rate } => {
                        let pos = self.labels.get(positive_label).copied().unwrap_or(0);
                        (pos as f64 / nf - rate).abs()
                    }
                    MismatchTarget::Categorical(dist) => {
                        0.5 * dist
                            .iter()
                            .map(|(k, q)| (self.labels.get(k).copied().unwrap_or(0) as f64 / nf - q).abs())
                            .sum::<f64>()
                    }
                };
                v.set(M::Mismatch, Some(value));
            }
        }
        Ok(Finalized {
            metrics: v,
            warnings,
            notes,
        })
    }
}

/// Result of finalizing a state.
#[derive(Clone, Debug, Serialize)]
pub struct Finalized {
    pub metrics: MetricVector,
    pub warnings: Vec<String>,
    pub notes: PerMetric<Option<String>>,
}
