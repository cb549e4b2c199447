use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::metric::{Merit, MetricId};
use super::per_metric::{PartialPerMetric, PerMetric};
use super::SCHEMA_VERSION;
use crate::error::{Error, Result};

/// Pass criterion for one metric.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// The candidate must be no worse than the pool's optimum, within `tolerance`.
    EqualPoolOptimal {
        tolerance: f64,
    },
    /// Inclusive range.
    Range {
        lo: f64,
        hi: f64,
    },
    AtLeast(f64),
    AtMost(f64),
    Ignore,
}

impl Criterion {
    pub fn is_ignore(&self) -> bool {
        matches!(self, Criterion::Ignore)
    }

    fn check(&self, m: MetricId) -> Result<()> {
        let bad = |msg: String| Err(Error::invalid(format!("criterion for {m}: {msg}")));
        match *self {
            Criterion::EqualPoolOptimal { tolerance } if !(tolerance >= 0.0 && tolerance.is_finite()) => {
                bad(format!("tolerance {tolerance} must be finite and >= 0"))
            }
            Criterion::Range { lo, hi } if !(lo <= hi) => bad(format!("range [{lo}, {hi}] is not ordered")),
            Criterion::AtLeast(x) | Criterion::AtMost(x) if x.is_nan() => bad("bound is NaN".into()),
            _ => Ok(()),
        }
    }
}

/// One criterion and one merit direction per metric.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdSpec {
    criteria: PerMetric<Criterion>,
    merit: PerMetric<Merit>,
}

impl Default for ThresholdSpec {
    fn default() -> Self {
        Self::ignore_all()
    }
}

impl ThresholdSpec {
    pub fn ignore_all() -> Self {
        ThresholdSpec {
            criteria: PerMetric::from_fn(|_| Criterion::Ignore),
            merit: PerMetric::from_fn(MetricId::default_merit),
        }
    }

    pub fn with(mut self, m: MetricId, c: Criterion) -> Self {
        self.criteria[m] = c;
        self
    }

    pub fn with_merit(mut self, m: MetricId, merit: Merit) -> Self {
        self.merit[m] = merit;
        self
    }

    pub fn criterion(&self, m: MetricId) -> Criterion {
        self.criteria[m]
    }

    pub fn set(&mut self, m: MetricId, c: Criterion) {
        self.criteria[m] = c;
    }

    pub fn merit(&self, m: MetricId) -> Merit {
        self.merit[m]
    }

    pub fn active(&self) -> impl Iterator<Item = (MetricId, Criterion)> + '_ {
        self.criteria.iter().filter(|(_, c)| !c.is_ignore()).map(|(m, c)| (m, *c))
    }

    pub fn validate(&self) -> Result<()> {
        for (m, c) in self.criteria.iter() {
            c.check(m)?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ThresholdSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Serialize)]
struct SpecOut<'a> {
    schema_version: u32,
    criteria: &'a PerMetric<Criterion>,
    merit: &'a PerMetric<Merit>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecIn {
    #[serde(default)]
    schema_version: Option<u32>,
    criteria: PartialPerMetric<Criterion>,
    #[serde(default)]
    merit: Option<PartialPerMetric<Merit>>,
}

impl Serialize for ThresholdSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        SpecOut {
            schema_version: SCHEMA_VERSION,
            criteria: &self.criteria,
            merit: &self.merit,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ThresholdSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = SpecIn::deserialize(deserializer)?;
        if let Some(v) = raw.schema_version {
            if v != SCHEMA_VERSION {
                return Err(serde::de::Error::custom(format!("unsupported schema_version {v}")));
            }
        }
        let spec = ThresholdSpec {
            criteria: raw.criteria.fill(|_| Criterion::Ignore),
            merit: match raw.merit {
                Some(m) => m.fill(MetricId::default_merit),
                None => PerMetric::from_fn(MetricId::default_merit),
            },
        };
        spec.validate().map_err(serde::de::Error::custom)?;
        Ok(spec)
    }
}
