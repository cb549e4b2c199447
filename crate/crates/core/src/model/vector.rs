use std::fmt;

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::metric::MetricId;
use super::per_metric::PerMetric;

/// Values of the eleven metrics for one dataset. Absent metrics are `None`,
/// never zero.
///
/// JSON form: one key per metric in canonical order (`null` when absent),
/// followed by `time_unit`. Count metrics serialize as integers.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct MetricVector {
    values: PerMetric<Option<f64>>,
    time_unit: Option<String>,
}

impl MetricVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_time_unit(mut self, unit: impl Into<String>) -> Self {
        self.time_unit = Some(unit.into());
        self
    }

    pub fn time_unit(&self) -> Option<&str> {
        self.time_unit.as_deref()
    }

    pub fn set_time_unit(&mut self, unit: Option<String>) {
        self.time_unit = unit;
    }

    #[inline]
    pub fn get(&self, m: MetricId) -> Option<f64> {
        self.values[m]
    }

    pub fn set(&mut self, m: MetricId, value: Option<f64>) {
        self.values[m] = value;
    }

    pub fn with(mut self, m: MetricId, value: f64) -> Self {
        self.values[m] = Some(value);
        self
    }

    pub fn iter(&self) -> impl Iterator<Item = (MetricId, Option<f64>)> + '_ {
        self.values.iter().map(|(m, v)| (m, *v))
    }

    pub fn present(&self) -> impl Iterator<Item = (MetricId, f64)> + '_ {
        self.iter().filter_map(|(m, v)| v.map(|v| (m, v)))
    }

    /// Checks the per-metric domain constraints. Returns one message per violation.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (m, v) in self.present() {
            if !v.is_finite() {
                out.push(format!("{m} is not finite"));
                continue;
            }
            let ok = match m {
                MetricId::Volume | MetricId::Scope | MetricId::Variety => v >= 0.0 && v.fract() == 0.0,
                MetricId::Granularity => v > 0.0,
                MetricId::Aggregation => v > 0.0 && v <= 1.0,
                MetricId::Coverage => (0.0..=1.0).contains(&v),
                _ => v >= 0.0,
            };
            if !ok {
                out.push(format!("{m} = {v} is outside its domain"));
            }
        }
        out
    }
}

impl Serialize for MetricVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(MetricId::COUNT + 1))?;
        for (m, v) in self.iter() {
            match v {
                None => map.serialize_entry(m.name(), &())?,
                Some(x) if m.is_count() && x >= 0.0 && x.fract() == 0.0 && x < 2f64.powi(63) => {
                    map.serialize_entry(m.name(), &(x as u64))?
                }
                Some(x) => map.serialize_entry(m.name(), &x)?,
            }
        }
        map.serialize_entry("time_unit", &self.time_unit)?;
        map.end()
    }
}

impl<'de> Deserialize<'de> for MetricVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V;

        impl<'de> Visitor<'de> for V {
            type Value = MetricVector;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a metric vector object")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<MetricVector, A::Error> {
                let mut out = MetricVector::new();
                let mut seen = [false; MetricId::COUNT];
                while let Some(key) = access.next_key::<String>()? {
                    if key == "time_unit" {
                        out.time_unit = access.next_value()?;
                        continue;
                    }
                    let m: MetricId = key.parse().map_err(serde::de::Error::custom)?;
                    if std::mem::replace(&mut seen[m.index()], true) {
                        return Err(serde::de::Error::custom(format!("duplicate metric `{key}`")));
                    }
                    out.values[m] = access.next_value()?;
                }
                Ok(out)
            }
        }

        deserializer.deserialize_map(V)
    }
}
