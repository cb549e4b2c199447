//! Sensitivity classification from metric-vs-performance sweeps, and
//! threshold derivation from a profile and the pool's metrics.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    Criterion, Merit, MetricId, MetricVector, PartialPerMetric, PerMetric, Provenance, SensitivityEntry, SensitivityLevel,
    SensitivityProfile, ThresholdSpec, SCHEMA_VERSION,
};

pub const DEFAULT_RHO_HIGH: f64 = 0.8;
pub const DEFAULT_RHO_MOD: f64 = 0.4;
pub const MIN_GROUP_POINTS: usize = 4;
const CONSTANCY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPoint {
    pub metrics: MetricVector,
    pub performance: f64,
    pub varied_metric: MetricId,
    #[serde(default)]
    pub tag: String,
}

/// Sweep points plus the direction in which performance improves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSet {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub performance_direction: Merit,
    pub points: Vec<SweepPoint>,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= CONSTANCY_TOL * a.abs().max(b.abs())
}

impl SweepSet {
    pub fn new(points: Vec<SweepPoint>, performance_direction: Merit) -> Self {
        SweepSet {
            schema_version: SCHEMA_VERSION,
            performance_direction,
            points,
        }
    }

    /// Points grouped by varied metric, canonical order, input order within groups.
    pub fn groups(&self) -> BTreeMap<MetricId, Vec<&SweepPoint>> {
        let mut out: BTreeMap<MetricId, Vec<&SweepPoint>> = BTreeMap::new();
        for p in &self.points {
            out.entry(p.varied_metric).or_default().push(p);
        }
        out
    }

    /// Checks finiteness, presence of the varied metric, and that no other
    /// metric changes within a group.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidSweep(format!(
                "unsupported schema_version {}",
                self.schema_version
            )));
        }
        for (i, p) in self.points.iter().enumerate() {
            if !p.performance.is_finite() {
                return Err(Error::InvalidSweep(format!("point {i}: performance is not finite")));
            }
            if p.metrics.get(p.varied_metric).is_none() {
                return Err(Error::InvalidSweep(format!(
                    "point {i}: varied metric `{}` is absent",
                    p.varied_metric
                )));
            }
        }
        for (metric, pts) in self.groups() {
            let first = &pts[0].metrics;
            for p in &pts[1..] {
                for other in MetricId::ALL {
                    if other == metric {
                        continue;
                    }
                    let same = match (first.get(other), p.metrics.get(other)) {
                        (None, None) => true,
                        (Some(a), Some(b)) => close(a, b),
                        _ => false,
                    };
                    if !same {
                        return Err(Error::ConfoundedSweep {
                            metric,
                            detail: format!("`{other}` changes within the group (tag `{}`)", p.tag),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: SweepSet = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    /// CSV columns: `varied_metric`, `tag`, one column per metric by
    /// canonical name (empty cell = absent), `performance`. Metric columns
    /// may be omitted entirely.
    pub fn read_csv(reader: impl Read, performance_direction: Merit) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| headers.iter().position(|h| h.trim() == name);
        let varied = col("varied_metric").ok_or_else(|| Error::MissingField {
            field: "varied_metric".into(),
        })?;
        let perf = col("performance").ok_or_else(|| Error::MissingField {
            field: "performance".into(),
        })?;
        let tag = col("tag");
        let metric_cols: Vec<(MetricId, usize)> = MetricId::ALL.iter().filter_map(|&m| col(m.name()).map(|c| (m, c))).collect();
        let mut points = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = i as u64 + 2;
            let bad = |field: &str, message: String| Error::TypeError {
                line,
                field: field.to_owned(),
                message,
            };
            let cell = |c: usize| rec.get(c).unwrap_or("").trim();
            let varied_metric: MetricId = cell(varied).parse().map_err(|e: Error| bad("varied_metric", e.to_string()))?;
            let performance: f64 = cell(perf)
                .parse()
                .map_err(|_| bad("performance", format!("`{}` is not a number", cell(perf))))?;
            let mut metrics = MetricVector::new();
            for &(m, c) in &metric_cols {
                let text = cell(c);
                if !text.is_empty() {
                    let x: f64 = text.parse().map_err(|_| bad(m.name(), format!("`{text}` is not a number")))?;
                    metrics.set(m, Some(x));
                }
            }
            points.push(SweepPoint {
                metrics,
                performance,
                varied_metric,
                tag: tag.map(|c| cell(c).to_owned()).unwrap_or_default(),
            });
        }
        let s = SweepSet::new(points, performance_direction);
        s.validate()?;
        Ok(s)
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["varied_metric", "tag"];
        header.extend(MetricId::ALL.iter().map(|m| m.name()));
        header.push("performance");
        w.write_record(&header)?;
        for p in &self.points {
            let mut row = vec![p.varied_metric.name().to_owned(), p.tag.clone()];
            row.extend(
                MetricId::ALL
                    .iter()
                    .map(|&m| p.metrics.get(m).map(|x| x.to_string()).unwrap_or_default()),
            );
            row.push(p.performance.to_string());
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }

    /// Reads `.json` as JSON and anything else as CSV.
    pub fn load(path: &Path, performance_direction: Merit) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            let mut text = String::new();
            std::io::BufReader::new(file)
                .read_to_string(&mut text)
                .map_err(|e| Error::io(path, e))?;
            Self::from_json(&text)
        } else {
            Self::read_csv(std::io::BufReader::new(file), performance_direction)
        }
    }
}

/// Ranks starting at 1; ties share their average rank.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
    }
}

/// Spearman rank correlation; `None` when either side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    if x.len() < 2 {
        return None;
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

pub fn classify(rho: f64, rho_high: f64, rho_mod: f64) -> SensitivityLevel {
    let a = rho.abs();
    if a >= rho_high {
        SensitivityLevel::High
    } else if a >= rho_mod {
        SensitivityLevel::Moderate
    } else {
        SensitivityLevel::Low
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SensitivityFit {
    pub profile: SensitivityProfile,
    pub warnings: Vec<String>,
}

/// Classifies each swept metric by the rank correlation between its value
/// and performance. Metrics without a sweep group stay Low.
pub fn fit_sensitivity(sweeps: &SweepSet, rho_high: f64, rho_mod: f64) -> Result<SensitivityFit> {
    if !(0.0 <= rho_mod && rho_mod <= rho_high && rho_high <= 1.0) {
        return Err(Error::invalid(format!(
            "cutoffs must satisfy 0 <= rho_mod <= rho_high <= 1 (got {rho_mod}, {rho_high})"
        )));
    }
    sweeps.validate()?;
    let groups = sweeps.groups();
    let mut profile = SensitivityProfile::all_low();
    let mut warnings = Vec::new();
    for m in MetricId::ALL {
        let Some(pts) = groups.get(&m) else {
            warnings.push(format!("{m}: no sweep group; defaulting to low"));
            continue;
        };
        if pts.len() < MIN_GROUP_POINTS {
            return Err(Error::InvalidSweep(format!(
                "group `{m}` has {} points; at least {MIN_GROUP_POINTS} are required",
                pts.len()
            )));
        }
        let xs: Vec<f64> = pts.iter().map(|p| p.metrics.get(m).expect("validated")).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.performance).collect();
        if xs.iter().all(|&x| x == xs[0]) {
            return Err(Error::DegenerateSweep { metric: m });
        }
        let mut rho = spearman(&xs, &ys).unwrap_or(0.0);
        if sweeps.performance_direction == Merit::LowerBetter {
            rho = -rho;
        }
        // Keep the sign of exact zeros stable in serialized output.
        if rho == 0.0 {
            rho = 0.0;
        }
        profile.set(
            m,
            SensitivityEntry {
                level: classify(rho, rho_high, rho_mod),
                provenance: Provenance::Fitted { correlation: rho },
            },
        );
    }
    Ok(SensitivityFit { profile, warnings })
}

/// Threshold rule expressed against the pool value or as absolute bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyRule {
    /// `[lo, hi]` as fractions of the pool value.
    RangeFraction {
        lo: f64,
        hi: f64,
    },
    /// At least this fraction of the pool value.
    AtLeastFraction(f64),
    /// At most this fraction of the pool value.
    AtMostFraction(f64),
    Range {
        lo: f64,
        hi: f64,
    },
    AtLeast(f64),
    AtMost(f64),
    /// Pool-optimal with this absolute tolerance.
    EqualPoolOptimal {
        tolerance: f64,
    },
    Ignore,
}

/// How sensitivity levels turn into criteria.
///
/// A Moderate volume gets `moderate_volume`; other Moderate metrics get
/// `moderate_higher` or `moderate_lower` by merit direction. `rules`
/// overrides the level default for individual metrics (Low metrics are
/// always ignored).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdPolicy {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    /// Relative tolerance for pool-optimal criteria on real-valued metrics.
    #[serde(default = "default_rel_tol")]
    pub high_relative_tolerance: f64,
    #[serde(default = "default_moderate_volume")]
    pub moderate_volume: PolicyRule,
    #[serde(default = "default_moderate_higher")]
    pub moderate_higher: PolicyRule,
    #[serde(default = "default_moderate_lower")]
    pub moderate_lower: PolicyRule,
    #[serde(default = "no_rules")]
    pub rules: PartialPerMetric<PolicyRule>,
}

fn default_rel_tol() -> f64 {
    1e-6
}

fn default_moderate_volume() -> PolicyRule {
    PolicyRule::RangeFraction { lo: 0.25, hi: 0.75 }
}

fn default_moderate_higher() -> PolicyRule {
    PolicyRule::AtLeastFraction(0.75)
}

fn default_moderate_lower() -> PolicyRule {
    PolicyRule::AtMostFraction(1.25)
}

fn no_rules() -> PartialPerMetric<PolicyRule> {
    PartialPerMetric(PerMetric::default())
}

impl Default for ThresholdPolicy {
    fn default() -> Self {
        ThresholdPolicy {
            schema_version: SCHEMA_VERSION,
            high_relative_tolerance: default_rel_tol(),
            moderate_volume: default_moderate_volume(),
            moderate_higher: default_moderate_higher(),
            moderate_lower: default_moderate_lower(),
            rules: no_rules(),
        }
    }
}

impl Serialize for PartialPerMetric<PolicyRule> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let present: Vec<_> = self.0.iter().filter_map(|(m, r)| r.map(|r| (m, r))).collect();
        let mut map = serializer.serialize_map(Some(present.len()))?;
        for (m, r) in present {
            map.serialize_entry(m.name(), &r)?;
        }
        map.end()
    }
}

impl ThresholdPolicy {
    pub fn with_rule(mut self, m: MetricId, rule: PolicyRule) -> Self {
        self.rules.0[m] = Some(rule);
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: ThresholdPolicy = serde_json::from_str(text)?;
        if p.schema_version != SCHEMA_VERSION {
            return Err(Error::invalid(format!("unsupported schema_version {}", p.schema_version)));
        }
        if !(p.high_relative_tolerance >= 0.0) {
            return Err(Error::invalid("high_relative_tolerance must be >= 0"));
        }
        Ok(p)
    }
}

fn apply(rule: PolicyRule, pool: f64) -> Criterion {
    match rule {
        PolicyRule::RangeFraction { lo, hi } => Criterion::Range {
            lo: lo * pool,
            hi: hi * pool,
        },
        PolicyRule::AtLeastFraction(f) => Criterion::AtLeast(f * pool),
        PolicyRule::AtMostFraction(f) => Criterion::AtMost(f * pool),
        PolicyRule::Range { lo, hi } => Criterion::Range { lo, hi },
        PolicyRule::AtLeast(x) => Criterion::AtLeast(x),
        PolicyRule::AtMost(x) => Criterion::AtMost(x),
        PolicyRule::EqualPoolOptimal { tolerance } => Criterion::EqualPoolOptimal { tolerance },
        PolicyRule::Ignore => Criterion::Ignore,
    }
}

/// High metrics become pool-optimal, Moderate metrics a policy bound, Low
/// metrics are ignored. Every non-Low metric needs a pool value.
///
/// The pool passes every derived criterion except a Moderate volume range,
/// which by default demands a strict subset.
pub fn derive_thresholds(profile: &SensitivityProfile, pool: &MetricVector, policy: &ThresholdPolicy) -> Result<ThresholdSpec> {
    let mut spec = ThresholdSpec::ignore_all();
    for m in MetricId::ALL {
        let level = profile.level(m);
        if level == SensitivityLevel::Low {
            continue;
        }
        let value = pool.get(m).ok_or(Error::MissingPoolMetric(m))?;
        let criterion = match (policy.rules.0[m], level) {
            (Some(rule), _) => apply(rule, value),
            (None, SensitivityLevel::High) => Criterion::EqualPoolOptimal {
                tolerance: if m.is_count() {
                    0.0
                } else {
                    policy.high_relative_tolerance * value.abs()
                },
            },
            (None, _) if m == MetricId::Volume => apply(policy.moderate_volume, value),
            (None, _) => match m.default_merit() {
                Merit::HigherBetter => apply(policy.moderate_higher, value),
                Merit::LowerBetter => apply(policy.moderate_lower, value),
            },
        };
        spec.set(m, criterion);
    }
    spec.validate()?;
    Ok(spec)
}
