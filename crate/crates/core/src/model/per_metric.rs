//! Fixed-size per-metric storage serialized as a JSON object in canonical order.

use std::fmt;
use std::marker::PhantomData;
use std::ops::{Index, IndexMut};

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::metric::MetricId;

#[derive(Clone, Debug, PartialEq)]
pub struct PerMetric<T>(pub [T; MetricId::COUNT]);

impl<T> PerMetric<T> {
    pub fn from_fn(mut f: impl FnMut(MetricId) -> T) -> Self {
        PerMetric(std::array::from_fn(|i| f(MetricId::ALL[i])))
    }

    pub fn iter(&self) -> impl Iterator<Item = (MetricId, &T)> {
        MetricId::ALL.into_iter().zip(self.0.iter())
    }

    pub fn map<U>(&self, mut f: impl FnMut(MetricId, &T) -> U) -> PerMetric<U> {
        PerMetric::from_fn(|m| f(m, &self[m]))
    }
}

impl<T: Default> Default for PerMetric<T> {
    fn default() -> Self {
        PerMetric::from_fn(|_| T::default())
    }
}

impl<T> Index<MetricId> for PerMetric<T> {
    type Output = T;

    fn index(&self, m: MetricId) -> &T {
        &self.0[m.index()]
    }
}

impl<T> IndexMut<MetricId> for PerMetric<T> {
    fn index_mut(&mut self, m: MetricId) -> &mut T {
        &mut self.0[m.index()]
    }
}

impl<T: Serialize> Serialize for PerMetric<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(MetricId::COUNT))?;
        for (m, v) in self.iter() {
            map.serialize_entry(m.name(), v)?;
        }
        map.end()
    }
}

/// Deserialized form where keys may be missing; callers choose defaults.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialPerMetric<T>(pub PerMetric<Option<T>>);

impl<T> PartialPerMetric<T> {
    pub fn fill(self, mut default: impl FnMut(MetricId) -> T) -> PerMetric<T> {
        let PerMetric(arr) = self.0;
        let mut i = 0;
        PerMetric(arr.map(|v| {
            let m = MetricId::ALL[i];
            i += 1;
            v.unwrap_or_else(|| default(m))
        }))
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for PartialPerMetric<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V<T>(PhantomData<T>);

        impl<'de, T: Deserialize<'de>> Visitor<'de> for V<T> {
            type Value = PartialPerMetric<T>;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object keyed by metric name")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Self::Value, A::Error> {
                let mut out: PerMetric<Option<T>> = PerMetric::from_fn(|_| None);
                while let Some(key) = access.next_key::<String>()? {
                    let metric: MetricId = key.parse().map_err(serde::de::Error::custom)?;
                    if out[metric].is_some() {
                        return Err(serde::de::Error::custom(format!("duplicate metric `{key}`")));
                    }
                    out[metric] = Some(access.next_value()?);
                }
                Ok(PartialPerMetric(out))
            }
        }

        deserializer.deserialize_map(V(PhantomData))
    }
}
