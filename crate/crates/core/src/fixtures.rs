//! Deterministic generators for the shipped example pools.
//!
//! Each generator returns a manifest and in-memory records whose pool
//! metrics are known exactly from the construction.

use std::collections::BTreeMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::ingest::{DatasetManifest, FieldDef, FieldKind, MismatchTarget, Record, Schema, TimeQuantity, Value};
use crate::model::{Criterion, MetricId, SensitivityProfile, ThresholdSpec};
use crate::rng::Stream;
use crate::sensitivity::{PolicyRule, ThresholdPolicy};

const DAY: i64 = 86_400;
/// Julian year in seconds.
const YEAR: i64 = 31_557_600;

pub const CIVIL_PROVINCES: usize = 32;
pub const CIVIL_CASE_TYPES: usize = 100;
/// Court partition shares; their squares sum to 0.245.
pub const CIVIL_PARTITION_SHARES: [(&str, u32); 5] = [("A", 30), ("B", 30), ("C", 20), ("D", 15), ("E", 5)];
/// 2013-01-01T00:00:00Z.
const CIVIL_START: i64 = 1_356_998_400;
const CIVIL_YEARS: i64 = 6;
const CIVIL_MAX_DAYS: usize = 300;

pub fn civil_manifest() -> DatasetManifest {
    let schema = Schema::new(vec![
        FieldDef::new("case_id", FieldKind::Text),
        FieldDef::new("province", FieldKind::Text),
        FieldDef::new("case_type", FieldKind::Text),
        FieldDef::new("court_partition", FieldKind::Text),
        FieldDef::new("filed_at", FieldKind::Timestamp),
        FieldDef::new("recorded_at", FieldKind::Timestamp),
        FieldDef::new("label", FieldKind::Text),
        FieldDef::new("corrupted", FieldKind::Boolean),
    ]);
    let mut m = DatasetManifest::new(schema, "case_id", TimeQuantity::years(1.0));
    m.event_time_field = Some("filed_at".into());
    m.collection_time_field = Some("recorded_at".into());
    m.scope_field = Some("province".into());
    m.variety_field = Some("case_type".into());
    m.granularity_constant = Some(1.0);
    m.aggregation_field = Some("court_partition".into());
    m.distortion_field = Some("corrupted".into());
    m.label_field = Some("label".into());
    m.mismatch_target = Some(MismatchTarget::Binary {
        positive_label: "1".into(),
        rate: 0.5,
    });
    m.nominal_sampling_interval = Some(TimeQuantity::days(1.0));
    m
}

/// Civil-case pool of `n` records (a multiple of 20, at least 3,200).
///
/// Pool metrics: volume n, delay 0, scope 32, granularity 1, variety 100,
/// duration 6 years, sampling rate 1, aggregation 0.245, distortion 0,
/// mismatch 0.
pub fn civil_records(n: usize) -> Result<Vec<Record>> {
    if n % 20 != 0 || n < CIVIL_PROVINCES * CIVIL_CASE_TYPES {
        return Err(Error::invalid(format!(
            "civil pool size {n} must be a multiple of 20 and >= 3200"
        )));
    }
    let mut cuts = Vec::new();
    let mut acc = 0;
    for (name, pct) in CIVIL_PARTITION_SHARES {
        acc += n * pct as usize / 100;
        cuts.push((acc, name));
    }
    let mult = (3739..).find(|p| gcd(*p, n) == 1).expect("coprime multiplier exists");
    // Province g is observed daily for `days[g]` consecutive days; the first
    // province opens the span and the last one closes it exactly six years on.
    let per = |g: usize| n / CIVIL_PROVINCES + usize::from(g < n % CIVIL_PROVINCES);
    let days = |g: usize| per(g).min(CIVIL_MAX_DAYS) as i64;
    let last = CIVIL_PROVINCES - 1;
    let end = CIVIL_START + CIVIL_YEARS * YEAR;
    let base = |g: usize| {
        if g == last {
            end - (days(g) - 1) * DAY
        } else {
            CIVIL_START + g as i64 * (CIVIL_YEARS * YEAR - (CIVIL_MAX_DAYS as i64 - 1) * DAY) / last as i64
        }
    };
    let records = (0..n)
        .map(|i| {
            let g = i % CIVIL_PROVINCES;
            let d = i / CIVIL_PROVINCES;
            let t = base(g) + (d as i64 % days(g)) * DAY;
            let slot = (i * mult) % n;
            let partition = cuts.iter().find(|(c, _)| slot < *c).expect("slot below n").1;
            Record::new(vec![
                Value::Text(format!("C{i:06}")),
                Value::Text(format!("P{:02}", g + 1)),
                Value::Text(format!("T{:03}", i % CIVIL_CASE_TYPES + 1)),
                Value::Text(partition.into()),
                Value::Timestamp(t),
                Value::Timestamp(t),
                Value::Text(((d + g) % 2).to_string()),
                Value::Boolean(false),
            ])
        })
        .collect();
    Ok(records)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// High: variety, aggregation, distortion, mismatch. Moderate: volume, scope.
pub fn civil_profile() -> SensitivityProfile {
    use MetricId::*;
    SensitivityProfile::manual(&[Variety, Aggregation, Distortion, Mismatch], &[Volume, Scope])
}

/// Volume at least 60% of the pool, scope at least 27, mismatch at most 0.01.
pub fn civil_policy() -> ThresholdPolicy {
    ThresholdPolicy::default()
        .with_rule(MetricId::Volume, PolicyRule::AtLeastFraction(0.6))
        .with_rule(MetricId::Scope, PolicyRule::AtLeast(27.0))
        .with_rule(MetricId::Mismatch, PolicyRule::AtMost(0.01))
}

/// Gate used for the civil acceptance run on a pool of `n` records.
pub fn civil_thresholds(n: usize) -> ThresholdSpec {
    ThresholdSpec::ignore_all()
        .with(MetricId::Volume, Criterion::AtLeast((n as f64 * 0.6).ceil()))
        .with(MetricId::Scope, Criterion::AtLeast(27.0))
        .with(MetricId::Variety, Criterion::EqualPoolOptimal { tolerance: 0.0 })
        .with(MetricId::Distortion, Criterion::EqualPoolOptimal { tolerance: 0.0 })
        .with(MetricId::Mismatch, Criterion::AtMost(0.01))
}

pub const WEATHER_CITIES: usize = 9;
pub const WEATHER_FEATURES: [&str; 8] = [
    "temp_mean",
    "temp_min",
    "temp_max",
    "humidity",
    "pressure",
    "precipitation",
    "sunshine",
    "wind_speed",
];
const WEATHER_CLASSES: [&str; 3] = ["dry", "rain", "snow"];

pub fn weather_manifest() -> DatasetManifest {
    let mut fields = vec![
        FieldDef::new("obs_id", FieldKind::Text),
        FieldDef::new("city", FieldKind::Text),
        FieldDef::new("date", FieldKind::Timestamp),
        FieldDef::new("published", FieldKind::Timestamp),
    ];
    fields.extend(WEATHER_FEATURES.iter().map(|f| FieldDef::new(*f, FieldKind::Real)));
    fields.push(FieldDef::new("outlook", FieldKind::Text));
    let mut m = DatasetManifest::new(Schema::new(fields), "obs_id", TimeQuantity::years(1.0));
    m.event_time_field = Some("date".into());
    m.collection_time_field = Some("published".into());
    m.scope_constant = Some(4);
    m.feature_list = Some(WEATHER_FEATURES.iter().map(|f| f.to_string()).collect());
    m.granularity_constant = Some(0.6458);
    m.label_field = Some("outlook".into());
    m.mismatch_target = Some(MismatchTarget::Categorical(
        WEATHER_CLASSES
            .iter()
            .map(|c| (c.to_string(), 1.0 / 3.0))
            .collect::<BTreeMap<_, _>>(),
    ));
    m.nominal_sampling_interval = Some(TimeQuantity::days(1.0));
    m
}

/// Daily observations for nine cities over `days` days (a multiple of 3).
/// Outlook classes rotate so the label distribution is exactly uniform.
pub fn weather_records(days: usize, seed: u64) -> Result<Vec<Record>> {
    if days < 2 || days % 3 != 0 {
        return Err(Error::invalid(format!(
            "weather days {days} must be a multiple of 3 and >= 3"
        )));
    }
    let start = 10_957 * DAY; // 2000-01-01
    let mut s = Stream::new(seed);
    let mut out = Vec::with_capacity(days * WEATHER_CITIES);
    for day in 0..days {
        for city in 0..WEATHER_CITIES {
            let t = start + day as i64 * DAY;
            let season = (day as f64 / 365.25 * std::f64::consts::TAU).cos();
            let mut v = vec![
                Value::Text(format!("W{city}-{day:05}")),
                Value::Text(format!("city{:02}", city + 1)),
                Value::Timestamp(t),
                Value::Timestamp(t),
            ];
            let temp = 10.0 - 8.0 * season + 4.0 * (s.unit_f64() - 0.5);
            v.extend(
                [
                    temp,
                    temp - 4.0 * s.unit_f64(),
                    temp + 4.0 * s.unit_f64(),
                    50.0 + 40.0 * s.unit_f64(),
                    1000.0 + 30.0 * (s.unit_f64() - 0.5),
                    5.0 * s.unit_f64(),
                    12.0 * s.unit_f64(),
                    15.0 * s.unit_f64(),
                ]
                .map(|x| Value::Real((x * 100.0).round() / 100.0)),
            );
            v.push(Value::Text(WEATHER_CLASSES[(day + city) % 3].into()));
            out.push(Record::new(v));
        }
    }
    Ok(out)
}

/// High: scope, granularity, variety, delay, distortion, mismatch.
/// Moderate: volume, duration, sampling rate.
pub fn weather_profile() -> SensitivityProfile {
    use MetricId::*;
    SensitivityProfile::manual(
        &[Scope, Granularity, Variety, Delay, Distortion, Mismatch],
        &[Volume, Duration, SamplingRate],
    )
}

/// Volume between 40% and 70% of the pool.
pub fn weather_policy() -> ThresholdPolicy {
    ThresholdPolicy::default().with_rule(MetricId::Volume, PolicyRule::RangeFraction { lo: 0.4, hi: 0.7 })
}

pub fn ctr_manifest() -> DatasetManifest {
    let schema = Schema::new(vec![
        FieldDef::new("impression_id", FieldKind::Text),
        FieldDef::new("site", FieldKind::Text),
        FieldDef::new("ad_category", FieldKind::Text),
        FieldDef::new("shown_at", FieldKind::Timestamp),
        FieldDef::new("logged_at", FieldKind::Timestamp),
        FieldDef::new("clicked", FieldKind::Text),
        FieldDef::new("bot_flag", FieldKind::Boolean),
    ]);
    let mut m = DatasetManifest::new(schema, "impression_id", TimeQuantity::days(1.0));
    m.event_time_field = Some("shown_at".into());
    m.collection_time_field = Some("logged_at".into());
    m.scope_field = Some("site".into());
    m.variety_field = Some("ad_category".into());
    m.granularity_constant = Some(1.0);
    m.distortion_field = Some("bot_flag".into());
    m.label_field = Some("clicked".into());
    m.mismatch_target = Some(MismatchTarget::Binary {
        positive_label: "1".into(),
        rate: 0.5,
    });
    m.nominal_sampling_interval = Some(TimeQuantity::seconds(60.0));
    m
}

/// Click log with roughly 17% clicks spread over ten days.
pub fn ctr_records(n: usize, seed: u64) -> Result<Vec<Record>> {
    if n == 0 {
        return Err(Error::invalid("ctr pool needs at least one record"));
    }
    let start = 17_000 * DAY;
    let mut s = Stream::new(seed);
    let out = (0..n)
        .map(|i| {
            let shown = start + s.below(10 * DAY as u64) as i64;
            let lag = s.below(120) as i64;
            Record::new(vec![
                Value::Text(format!("I{i:08}")),
                Value::Text(format!("site{:02}", s.below(20))),
                Value::Text(format!("cat{:02}", s.below(24))),
                Value::Timestamp(shown),
                Value::Timestamp(shown + lag),
                Value::Text(if s.unit_f64() < 0.17 { "1" } else { "0" }.into()),
                Value::Boolean(false),
            ])
        })
        .collect();
    Ok(out)
}

/// High: delay, granularity, variety, distortion. Moderate: volume.
pub fn ctr_profile() -> SensitivityProfile {
    use MetricId::*;
    SensitivityProfile::manual(&[Delay, Granularity, Variety, Distortion], &[Volume])
}

/// Volume between 25% and 75% of the pool.
pub fn ctr_policy() -> ThresholdPolicy {
    ThresholdPolicy::default().with_rule(MetricId::Volume, PolicyRule::RangeFraction { lo: 0.25, hi: 0.75 })
}

/// Writes `records` as CSV with a header row in schema order.
pub fn write_csv(manifest: &DatasetManifest, records: &[Record], out: &mut dyn Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(manifest.schema.fields().iter().map(|f| f.name.as_str()))?;
    for r in records {
        w.write_record(r.values().iter().map(Value::to_csv_cell))?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Dataset;
    use crate::metrics::compute_all;

    #[test]
    fn civil_pool_vector() {
        let m = civil_manifest();
        let ds = Dataset::from_records(&m, civil_records(10_000).unwrap()).unwrap();
        let v = compute_all(&ds, &m).unwrap();
        let expect = [
            (MetricId::Volume, 10_000.0),
            (MetricId::Delay, 0.0),
            (MetricId::Scope, 32.0),
            (MetricId::Granularity, 1.0),
            (MetricId::Variety, 100.0),
            (MetricId::Duration, 6.0),
            (MetricId::SamplingRate, 1.0),
            (MetricId::Aggregation, 0.245),
            (MetricId::Distortion, 0.0),
            (MetricId::Mismatch, 0.0),
        ];
        for (id, want) in expect {
            let got = v.get(id).unwrap();
            assert!((got - want).abs() < 1e-12, "{id}: {got} != {want}");
        }
        assert_eq!(v.get(MetricId::Coverage), None);
    }

    #[test]
    fn weather_pool_vector() {
        let m = weather_manifest();
        let ds = Dataset::from_records(&m, weather_records(30, 1).unwrap()).unwrap();
        let v = compute_all(&ds, &m).unwrap();
        assert_eq!(v.get(MetricId::Scope), Some(4.0));
        assert_eq!(v.get(MetricId::Granularity), Some(0.6458));
        assert_eq!(v.get(MetricId::Variety), Some(8.0));
        assert_eq!(v.get(MetricId::Delay), Some(0.0));
        assert!(v.get(MetricId::Mismatch).unwrap().abs() < 1e-12);
    }

    #[test]
    fn ctr_mismatch_tracks_click_rate() {
        let m = ctr_manifest();
        let ds = Dataset::from_records(&m, ctr_records(20_000, 5).unwrap()).unwrap();
        let mm = compute_all(&ds, &m).unwrap().get(MetricId::Mismatch).unwrap();
        assert!((mm - 0.33).abs() < 0.01, "{mm}");
    }
}
