use std::borrow::Cow;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::time::{format_iso8601, parse_iso8601};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Text,
    Integer,
    Real,
    Timestamp,
    Boolean,
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FieldKind::Text => "text",
            FieldKind::Integer => "integer",
            FieldKind::Real => "real",
            FieldKind::Timestamp => "timestamp",
            FieldKind::Boolean => "boolean",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldDef {
    pub name: String,
    pub kind: FieldKind,
}

impl FieldDef {
    pub fn new(name: impl Into<String>, kind: FieldKind) -> Self {
        FieldDef { name: name.into(), kind }
    }
}

/// Ordered field names and kinds.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schema {
    fields: Vec<FieldDef>,
}

impl Schema {
    pub fn new(fields: Vec<FieldDef>) -> Self {
        Schema { fields }
    }

    pub fn fields(&self) -> &[FieldDef] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&FieldDef> {
        self.fields.iter().find(|f| f.name == name)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Null,
    Text(String),
    Integer(i64),
    Real(f64),
    /// Seconds since the Unix epoch.
    Timestamp(i64),
    Boolean(bool),
}

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    /// Canonical text used for distinct counting, labels and id lists.
    pub fn key(&self) -> Cow<'_, str> {
        match self {
            Value::Null => Cow::Borrowed(""),
            Value::Text(s) => Cow::Borrowed(s),
            Value::Integer(i) => Cow::Owned(i.to_string()),
            Value::Real(x) => Cow::Owned(x.to_string()),
            Value::Timestamp(t) => Cow::Owned(t.to_string()),
            Value::Boolean(b) => Cow::Borrowed(if *b { "true" } else { "false" }),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Integer(i) => Some(*i as f64),
            Value::Real(x) => Some(*x),
            Value::Boolean(b) => Some(if *b { 1.0 } else { 0.0 }),
            Value::Timestamp(t) => Some(*t as f64),
            _ => None,
        }
    }

    pub fn as_timestamp(&self) -> Option<i64> {
        match self {
            Value::Timestamp(t) => Some(*t),
            _ => None,
        }
    }

    /// Text as written to CSV output.
    pub fn to_csv_cell(&self) -> String {
        match self {
            Value::Timestamp(t) => format_iso8601(*t),
            other => other.key().into_owned(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Null => serde_json::Value::Null,
            Value::Text(s) => serde_json::Value::String(s.clone()),
            Value::Integer(i) => (*i).into(),
            Value::Real(x) => serde_json::Number::from_f64(*x).map_or(serde_json::Value::Null, Into::into),
            Value::Timestamp(t) => serde_json::Value::String(format_iso8601(*t)),
            Value::Boolean(b) => (*b).into(),
        }
    }

    pub(crate) fn digest_into(&self, buf: &mut Vec<u8>) {
        match self {
            Value::Null => buf.push(0),
            Value::Text(s) => {
                buf.push(1);
                buf.extend_from_slice(&(s.len() as u64).to_le_bytes());
                buf.extend_from_slice(s.as_bytes());
            }
            Value::Integer(i) => {
                buf.push(2);
                buf.extend_from_slice(&i.to_le_bytes());
            }
            Value::Real(x) => {
                buf.push(3);
                buf.extend_from_slice(&x.to_bits().to_le_bytes());
            }
            Value::Timestamp(t) => {
                buf.push(4);
                buf.extend_from_slice(&t.to_le_bytes());
            }
            Value::Boolean(b) => buf.extend_from_slice(&[5, u8::from(*b)]),
        }
    }
}

/// Parses one CSV cell. Empty cells are `Null`. `epoch_seconds` scales integer
/// timestamps.
pub fn parse_text(kind: FieldKind, text: &str, epoch_seconds: f64) -> Result<Value, String> {
    if text.is_empty() {
        return Ok(Value::Null);
    }
    match kind {
        FieldKind::Text => Ok(Value::Text(text.to_owned())),
        FieldKind::Integer => text
            .trim()
            .parse()
            .map(Value::Integer)
            .map_err(|_| format!("`{text}` is not an integer")),
        FieldKind::Real => text
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .map(Value::Real)
            .ok_or_else(|| format!("`{text}` is not a finite real")),
        FieldKind::Boolean => match text.trim().to_ascii_lowercase().as_str() {
            "true" | "1" | "yes" => Ok(Value::Boolean(true)),
            "false" | "0" | "no" => Ok(Value::Boolean(false)),
            _ => Err(format!("`{text}` is not a boolean")),
        },
        FieldKind::Timestamp => {
            if let Ok(i) = text.trim().parse::<i64>() {
                return Ok(Value::Timestamp(scale_epoch(i, epoch_seconds)));
            }
            parse_iso8601(text)
                .map(Value::Timestamp)
                .ok_or_else(|| format!("`{text}` is not an ISO-8601 timestamp or integer epoch"))
        }
    }
}

/// Converts one JSON value under the declared kind.
pub fn parse_json(kind: FieldKind, v: &serde_json::Value, epoch_seconds: f64) -> Result<Value, String> {
    use serde_json::Value as J;
    match (kind, v) {
        (_, J::Null) => Ok(Value::Null),
        (_, J::String(s)) => parse_text(kind, s, epoch_seconds),
        (FieldKind::Text, J::Number(n)) => Ok(Value::Text(n.to_string())),
        (FieldKind::Text, J::Bool(b)) => Ok(Value::Text(b.to_string())),
        (FieldKind::Integer, J::Number(n)) => n.as_i64().map(Value::Integer).ok_or_else(|| format!("{n} is not an integer")),
        (FieldKind::Real, J::Number(n)) => n
            .as_f64()
            .filter(|x| x.is_finite())
            .map(Value::Real)
            .ok_or_else(|| format!("{n} is not a finite real")),
        (FieldKind::Boolean, J::Bool(b)) => Ok(Value::Boolean(*b)),
        (FieldKind::Boolean, J::Number(n)) => match n.as_i64() {
            Some(0) => Ok(Value::Boolean(false)),
            Some(1) => Ok(Value::Boolean(true)),
            _ => Err(format!("{n} is not a boolean")),
        },
        (FieldKind::Timestamp, J::Number(n)) => n
            .as_i64()
            .map(|i| Value::Timestamp(scale_epoch(i, epoch_seconds)))
            .ok_or_else(|| format!("{n} is not an integer epoch")),
        (kind, other) => Err(format!("{other} is not a valid {kind}")),
    }
}

fn scale_epoch(i: i64, epoch_seconds: f64) -> i64 {
    if epoch_seconds == 1.0 {
        i
    } else {
        (i as f64 * epoch_seconds).round() as i64
    }
}

/// One row of typed values, aligned with the dataset schema.
#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    values: Vec<Value>,
}

impl Record {
    pub fn new(values: Vec<Value>) -> Self {
        Record { values }
    }

    #[inline]
    pub fn get(&self, idx: usize) -> &Value {
        &self.values[idx]
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }
}
