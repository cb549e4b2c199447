use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

const UNITS: [(&str, f64); 6] = [
    ("s", 1.0),
    ("min", 60.0),
    ("h", 3_600.0),
    ("d", 86_400.0),
    ("w", 604_800.0),
    // Julian year.
    ("y", 31_557_600.0),
];

/// A positive span of time written as `<number><unit>`, e.g. `1d`, `90min`, `1y`.
///
/// Units: `s`, `min`, `h`, `d`, `w`, `y` (Julian year, 365.25 days).
#[derive(Clone, Debug, PartialEq)]
pub struct TimeQuantity {
    amount: f64,
    unit: &'static str,
}

impl TimeQuantity {
    pub fn seconds(amount: f64) -> Self {
        TimeQuantity { amount, unit: "s" }
    }

    pub fn days(amount: f64) -> Self {
        TimeQuantity { amount, unit: "d" }
    }

    pub fn years(amount: f64) -> Self {
        TimeQuantity { amount, unit: "y" }
    }

    pub fn as_seconds(&self) -> f64 {
        let factor = UNITS.iter().find(|(u, _)| *u == self.unit).map(|(_, f)| *f).unwrap_or(1.0);
        self.amount * factor
    }

    pub fn is_positive(&self) -> bool {
        self.as_seconds() > 0.0 && self.as_seconds().is_finite()
    }
}

impl fmt::Display for TimeQuantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.amount, self.unit)
    }
}

impl FromStr for TimeQuantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        let split = s
            .find(|c: char| c.is_ascii_alphabetic())
            .ok_or_else(|| Error::invalid(format!("time quantity `{s}` has no unit")))?;
        let (num, unit) = s.split_at(split);
        let amount: f64 = num
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("time quantity `{s}` has no valid amount")))?;
        let unit = UNITS
            .iter()
            .find(|(u, _)| *u == unit.trim())
            .map(|(u, _)| *u)
            .ok_or_else(|| Error::invalid(format!("unknown time unit in `{s}`")))?;
        Ok(TimeQuantity { amount, unit })
    }
}

impl Serialize for TimeQuantity {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TimeQuantity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Seconds(f64),
        }
        match Raw::deserialize(d)? {
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
            Raw::Seconds(x) => Ok(TimeQuantity::seconds(x)),
        }
    }
}

/// Parses an ISO-8601 timestamp to whole seconds since the Unix epoch (UTC).
///
/// Accepts RFC 3339 date-times with offset, naive `YYYY-MM-DDTHH:MM:SS[.f]`
/// (also with a space separator) taken as UTC, and plain `YYYY-MM-DD`.
pub fn parse_iso8601(text: &str) -> Option<i64> {
    let t = text.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(t) {
        return Some(dt.timestamp());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(t, fmt) {
            return Some(dt.and_utc().timestamp());
        }
    }
    NaiveDate::parse_from_str(t, "%Y-%m-%d")
        .ok()
        .map(|d| d.and_hms_opt(0, 0, 0).expect("midnight").and_utc().timestamp())
}

/// Formats epoch seconds as an RFC 3339 UTC timestamp.
pub fn format_iso8601(secs: i64) -> String {
    DateTime::from_timestamp(secs, 0)
        .map(|d| d.format("%Y-%m-%dT%H:%M:%SZ").to_string())
        .unwrap_or_else(|| secs.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_quantities() {
        assert_eq!("1d".parse::<TimeQuantity>().unwrap().as_seconds(), 86_400.0);
        assert_eq!("90min".parse::<TimeQuantity>().unwrap().as_seconds(), 5_400.0);
        assert_eq!("1y".parse::<TimeQuantity>().unwrap().as_seconds(), 31_557_600.0);
        assert_eq!("0.5 h".parse::<TimeQuantity>().unwrap().as_seconds(), 1_800.0);
        assert!("12".parse::<TimeQuantity>().is_err());
        assert!("3 fortnights".parse::<TimeQuantity>().is_err());
        assert!(!"0s".parse::<TimeQuantity>().unwrap().is_positive());
        let q: TimeQuantity = serde_json::from_str("3600").unwrap();
        assert_eq!(q.as_seconds(), 3600.0);
        assert_eq!(serde_json::to_string(&TimeQuantity::days(2.0)).unwrap(), "\"2d\"");
    }

    #[test]
    fn parse_timestamps() {
        assert_eq!(parse_iso8601("1970-01-02"), Some(86_400));
        assert_eq!(parse_iso8601("1970-01-01T01:00:00Z"), Some(3_600));
        assert_eq!(parse_iso8601("1970-01-01T02:00:00+01:00"), Some(3_600));
        assert_eq!(parse_iso8601("1970-01-01 00:01:00"), Some(60));
        assert_eq!(parse_iso8601("not-a-date"), None);
        assert_eq!(format_iso8601(86_400), "1970-01-02T00:00:00Z");
    }
}
