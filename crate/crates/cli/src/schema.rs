//! Structural JSON-schema checks for the documents the CLI reads and writes.
//!
//! Supports the keyword subset the shipped schemas use: `type`, `enum`,
//! `const`, `properties`, `required`, `additionalProperties`, `items`,
//! `minimum`, `maximum`, `oneOf`, `anyOf` and local `$ref`s into `$defs`.

use clap::ValueEnum;
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum SchemaName {
    MetricsReport,
    SelectionReport,
    ComparisonReport,
    VerifyReport,
    SensitivityProfile,
    ThresholdSpec,
    ThresholdPolicy,
    RunConfig,
}

impl SchemaName {
    pub fn text(self) -> &'static str {
        match self {
            SchemaName::MetricsReport => include_str!("../../../schemas/metrics_report.schema.json"),
            SchemaName::SelectionReport => include_str!("../../../schemas/selection_report.schema.json"),
            SchemaName::ComparisonReport => include_str!("../../../schemas/comparison_report.schema.json"),
            SchemaName::VerifyReport => include_str!("../../../schemas/verify_report.schema.json"),
            SchemaName::SensitivityProfile => include_str!("../../../schemas/sensitivity_profile.schema.json"),
            SchemaName::ThresholdSpec => include_str!("../../../schemas/threshold_spec.schema.json"),
            SchemaName::ThresholdPolicy => include_str!("../../../schemas/threshold_policy.schema.json"),
            SchemaName::RunConfig => include_str!("../../../schemas/run_config.schema.json"),
        }
    }

    pub fn schema(self) -> Value {
        serde_json::from_str(self.text()).expect("shipped schemas are valid JSON")
    }
}

/// Every violation of `schema` in `doc`, as `pointer: message` lines.
pub fn check(schema: &Value, doc: &Value) -> Vec<String> {
    let mut errors = Vec::new();
    walk(schema, schema, doc, "", &mut errors);
    errors
}

pub fn check_named(name: SchemaName, doc: &Value) -> Vec<String> {
    check(&name.schema(), doc)
}

fn resolve<'a>(root: &'a Value, node: &'a Value) -> &'a Value {
    match node.get("$ref").and_then(Value::as_str) {
        Some(r) => {
            let target = r
                .strip_prefix('#')
                .and_then(|p| root.pointer(p))
                .unwrap_or_else(|| panic!("unresolvable $ref `{r}`"));
            resolve(root, target)
        }
        None => node,
    }
}

fn type_matches(t: &str, v: &Value) -> bool {
    match t {
        "null" => v.is_null(),
        "boolean" => v.is_boolean(),
        "object" => v.is_object(),
        "array" => v.is_array(),
        "string" => v.is_string(),
        "number" => v.is_number(),
        "integer" => v.as_f64().is_some_and(|x| x.fract() == 0.0),
        other => panic!("unknown schema type `{other}`"),
    }
}

fn walk(root: &Value, node: &Value, doc: &Value, at: &str, errors: &mut Vec<String>) {
    let node = resolve(root, node);
    let here = if at.is_empty() { "/" } else { at };
    let mut fail = |msg: String| errors.push(format!("{here}: {msg}"));

    if let Some(t) = node.get("type") {
        let ok = match t {
            Value::String(s) => type_matches(s, doc),
            Value::Array(ts) => ts.iter().filter_map(Value::as_str).any(|s| type_matches(s, doc)),
            _ => true,
        };
        if !ok {
            fail(format!("expected type {t}, found {}", short(doc)));
            return;
        }
    }
    if let Some(c) = node.get("const") {
        if c != doc {
            fail(format!("expected {c}, found {}", short(doc)));
        }
    }
    if let Some(Value::Array(options)) = node.get("enum") {
        if !options.contains(doc) {
            fail(format!("{} is not one of {}", short(doc), Value::Array(options.clone())));
        }
    }
    if let (Some(min), Some(x)) = (node.get("minimum").and_then(Value::as_f64), doc.as_f64()) {
        if x < min {
            fail(format!("{x} is below the minimum {min}"));
        }
    }
    if let (Some(max), Some(x)) = (node.get("maximum").and_then(Value::as_f64), doc.as_f64()) {
        if x > max {
            fail(format!("{x} is above the maximum {max}"));
        }
    }
    for (key, exactly_one) in [("oneOf", true), ("anyOf", false)] {
        if let Some(Value::Array(branches)) = node.get(key) {
            let matching = branches
                .iter()
                .filter(|b| {
                    let mut sub = Vec::new();
                    walk(root, b, doc, at, &mut sub);
                    sub.is_empty()
                })
                .count();
            if (exactly_one && matching != 1) || matching == 0 {
                fail(format!("{matching} of {} `{key}` branches match", branches.len()));
            }
        }
    }
    if let Value::Object(obj) = doc {
        let props = node.get("properties").and_then(Value::as_object);
        if let Some(Value::Array(req)) = node.get("required") {
            for r in req.iter().filter_map(Value::as_str) {
                if !obj.contains_key(r) {
                    errors.push(format!("{here}: missing required key `{r}`"));
                }
            }
        }
        for (k, v) in obj {
            let path = format!("{at}/{k}");
            match props.and_then(|p| p.get(k)) {
                Some(sub) => walk(root, sub, v, &path, errors),
                None => match node.get("additionalProperties") {
                    Some(Value::Bool(false)) => errors.push(format!("{here}: unexpected key `{k}`")),
                    Some(sub @ Value::Object(_)) => walk(root, sub, v, &path, errors),
                    _ => {}
                },
            }
        }
    }
    if let (Value::Array(items), Some(sub)) = (doc, node.get("items")) {
        for (i, v) in items.iter().enumerate() {
            walk(root, sub, v, &format!("{at}/{i}"), errors);
        }
    }
}

fn short(v: &Value) -> String {
    let s = v.to_string();
    if s.chars().count() > 60 {
        format!("{}...", s.chars().take(57).collect::<String>())
    } else {
        s
    }
}
