use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::metric::MetricId;
use super::per_metric::{PartialPerMetric, PerMetric};
use super::SCHEMA_VERSION;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensitivityLevel {
    High,
    Moderate,
    Low,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Manual,
    /// No information was available; the level is the default (Low).
    ManualDefault,
    Fitted {
        correlation: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityEntry {
    pub level: SensitivityLevel,
    pub provenance: Provenance,
}

impl SensitivityEntry {
    pub fn manual(level: SensitivityLevel) -> Self {
        SensitivityEntry {
            level,
            provenance: Provenance::Manual,
        }
    }
}

impl Default for SensitivityEntry {
    fn default() -> Self {
        SensitivityEntry {
            level: SensitivityLevel::Low,
            provenance: Provenance::ManualDefault,
        }
    }
}

/// Sensitivity level of every metric.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SensitivityProfile {
    entries: PerMetric<SensitivityEntry>,
}

impl SensitivityProfile {
    /// Every metric Low with default provenance.
    pub fn all_low() -> Self {
        Self::default()
    }

    /// Manual profile from explicit High and Moderate lists; the rest are Low.
    pub fn manual(high: &[MetricId], moderate: &[MetricId]) -> Self {
        SensitivityProfile {
            entries: PerMetric::from_fn(|m| {
                if high.contains(&m) {
                    SensitivityEntry::manual(SensitivityLevel::High)
                } else if moderate.contains(&m) {
                    SensitivityEntry::manual(SensitivityLevel::Moderate)
                } else {
                    SensitivityEntry::manual(SensitivityLevel::Low)
                }
            }),
        }
    }

    pub fn entry(&self, m: MetricId) -> SensitivityEntry {
        self.entries[m]
    }

    pub fn level(&self, m: MetricId) -> SensitivityLevel {
        self.entries[m].level
    }

    pub fn set(&mut self, m: MetricId, entry: SensitivityEntry) {
        self.entries[m] = entry;
    }

    pub fn iter(&self) -> impl Iterator<Item = (MetricId, &SensitivityEntry)> {
        self.entries.iter()
    }

    pub fn validate(&self) -> Result<()> {
        for (m, e) in self.entries.iter() {
            if let Provenance::Fitted { correlation } = e.provenance {
                if !(-1.0..=1.0).contains(&correlation) {
                    return Err(Error::invalid(format!(
                        "fitted correlation {correlation} for {m} outside [-1, 1]"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Serialize)]
struct ProfileOut<'a> {
    schema_version: u32,
    metrics: &'a PerMetric<SensitivityEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileIn {
    #[serde(default)]
    schema_version: Option<u32>,
    metrics: PartialPerMetric<SensitivityEntry>,
}

impl Serialize for SensitivityProfile {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ProfileOut {
            schema_version: SCHEMA_VERSION,
            metrics: &self.entries,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SensitivityProfile {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = ProfileIn::deserialize(deserializer)?;
        if let Some(v) = raw.schema_version {
            if v != SCHEMA_VERSION {
                return Err(serde::de::Error::custom(format!("unsupported schema_version {v}")));
            }
        }
        let profile = SensitivityProfile {
            entries: raw.metrics.fill(|_| SensitivityEntry::default()),
        };
        profile.validate().map_err(serde::de::Error::custom)?;
        Ok(profile)
    }
}
