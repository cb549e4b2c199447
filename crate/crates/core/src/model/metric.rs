use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// The eleven general information metrics, in canonical order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricId {
    Volume,
    Delay,
    Scope,
    Granularity,
    Variety,
    Duration,
    SamplingRate,
    Aggregation,
    Coverage,
    Distortion,
    Mismatch,
}

impl MetricId {
    pub const COUNT: usize = 11;

    pub const ALL: [MetricId; MetricId::COUNT] = [
        MetricId::Volume,
        MetricId::Delay,
        MetricId::Scope,
        MetricId::Granularity,
        MetricId::Variety,
        MetricId::Duration,
        MetricId::SamplingRate,
        MetricId::Aggregation,
        MetricId::Coverage,
        MetricId::Distortion,
        MetricId::Mismatch,
    ];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            MetricId::Volume => "volume",
            MetricId::Delay => "delay",
            MetricId::Scope => "scope",
            MetricId::Granularity => "granularity",
            MetricId::Variety => "variety",
            MetricId::Duration => "duration",
            MetricId::SamplingRate => "sampling_rate",
            MetricId::Aggregation => "aggregation",
            MetricId::Coverage => "coverage",
            MetricId::Distortion => "distortion",
            MetricId::Mismatch => "mismatch",
        }
    }

    /// Metrics whose values are integer counts.
    pub fn is_count(self) -> bool {
        matches!(self, MetricId::Volume | MetricId::Scope | MetricId::Variety)
    }

    /// Unit annotation. Time-valued metrics report in the manifest's time unit.
    pub fn unit(self) -> &'static str {
        match self {
            MetricId::Volume => "records",
            MetricId::Delay | MetricId::Duration => "time_unit",
            MetricId::Scope | MetricId::Variety => "count",
            MetricId::Granularity => "resolution",
            _ => "dimensionless",
        }
    }

    pub fn default_type_class(self) -> MetricTypeClass {
        classify_default(self)
    }

    pub fn default_merit(self) -> Merit {
        match self {
            MetricId::Delay | MetricId::Granularity | MetricId::Distortion | MetricId::Mismatch => Merit::LowerBetter,
            _ => Merit::HigherBetter,
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        MetricId::ALL
            .into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| Error::invalid(format!("unknown metric `{s}`")))
    }
}

/// How a metric behaves when a subset is formed from elements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricTypeClass {
    Additive,
    MaximumType,
    MinimumType,
    MeanType,
}

impl MetricTypeClass {
    pub const ALL: [MetricTypeClass; 4] = [
        MetricTypeClass::Additive,
        MetricTypeClass::MaximumType,
        MetricTypeClass::MinimumType,
        MetricTypeClass::MeanType,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricTypeClass::Additive => "additive",
            MetricTypeClass::MaximumType => "maximum_type",
            MetricTypeClass::MinimumType => "minimum_type",
            MetricTypeClass::MeanType => "mean_type",
        }
    }
}

impl fmt::Display for MetricTypeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricTypeClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        MetricTypeClass::ALL
            .into_iter()
            .find(|c| c.name() == key || c.name().trim_end_matches("_type") == key)
            .ok_or_else(|| Error::invalid(format!("unknown metric type class `{s}`")))
    }
}

/// Default type classification of each metric.
pub fn classify_default(metric: MetricId) -> MetricTypeClass {
    match metric {
        MetricId::Volume
        | MetricId::Scope
        | MetricId::Variety
        | MetricId::Duration
        | MetricId::Aggregation
        | MetricId::Coverage => MetricTypeClass::Additive,
        MetricId::Delay => MetricTypeClass::MaximumType,
        MetricId::Granularity | MetricId::SamplingRate | MetricId::Distortion | MetricId::Mismatch => MetricTypeClass::MeanType,
    }
}

/// Direction in which a metric value is considered better.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Merit {
    HigherBetter,
    LowerBetter,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_order_is_stable() {
        let names: Vec<&str> = MetricId::ALL.iter().map(|m| m.name()).collect();
        assert_eq!(
            names,
            [
                "volume",
                "delay",
                "scope",
                "granularity",
                "variety",
                "duration",
                "sampling_rate",
                "aggregation",
                "coverage",
                "distortion",
                "mismatch"
            ]
        );
        for (i, m) in MetricId::ALL.iter().enumerate() {
            assert_eq!(m.index(), i);
            assert_eq!(m.name().parse::<MetricId>().unwrap(), *m);
        }
    }

    #[test]
    fn default_classes() {
        assert_eq!(classify_default(MetricId::Volume), MetricTypeClass::Additive);
        assert_eq!(classify_default(MetricId::Delay), MetricTypeClass::MaximumType);
        assert_eq!(classify_default(MetricId::Granularity), MetricTypeClass::MeanType);
        for m in [
            MetricId::Scope,
            MetricId::Variety,
            MetricId::Duration,
            MetricId::Aggregation,
            MetricId::Coverage,
        ] {
            assert_eq!(classify_default(m), MetricTypeClass::Additive);
        }
        for m in [MetricId::SamplingRate, MetricId::Distortion, MetricId::Mismatch] {
            assert_eq!(classify_default(m), MetricTypeClass::MeanType);
        }
        assert!(MetricId::ALL
            .iter()
            .all(|m| classify_default(*m) != MetricTypeClass::MinimumType));
    }

    #[test]
    fn parse_variants() {
        assert_eq!("Sampling Rate".parse::<MetricId>().unwrap(), MetricId::SamplingRate);
        assert!("bogus".parse::<MetricId>().is_err());
        assert_eq!("maximum".parse::<MetricTypeClass>().unwrap(), MetricTypeClass::MaximumType);
        assert_eq!("mean_type".parse::<MetricTypeClass>().unwrap(), MetricTypeClass::MeanType);
    }
}
