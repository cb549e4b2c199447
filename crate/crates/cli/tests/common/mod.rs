#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use gime_core::ingest::{DatasetManifest, FieldDef, FieldKind, Schema, TimeQuantity};
use serde_json::Value;

pub struct Out {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn gime(args: &[&str]) -> Out {
    let out = Command::new(env!("CARGO_BIN_EXE_gime"))
        .args(args)
        .output()
        .expect("spawn gime");
    Out {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

pub fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// The shipped desk-scale civil fixture.
pub fn civil_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/civil")
}

pub fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))).unwrap()
}

/// Report without its wall-clock fields.
pub fn without_timing(mut v: Value) -> Value {
    if let Value::Object(o) = &mut v {
        o.remove("timing");
    }
    v
}

/// 500 records over 40 kinds where kinds 0..8 occur exactly once, so a
/// uniform 120-record subset usually misses some of them.
pub fn write_skewed(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    std::fs::create_dir_all(dir).unwrap();
    let schema = Schema::new(vec![
        FieldDef::new("id", FieldKind::Text),
        FieldDef::new("kind", FieldKind::Text),
    ]);
    let mut m = DatasetManifest::new(schema, "id", TimeQuantity::days(1.0));
    m.variety_field = Some("kind".into());
    let manifest = dir.join("manifest.json");
    std::fs::write(&manifest, serde_json::to_vec_pretty(&m).unwrap()).unwrap();
    let mut csv = String::from("id,kind\n");
    for i in 0..500usize {
        let kind = if i < 40 { i } else { 8 + (i * 7919) % 32 };
        csv.push_str(&format!("r{i},k{kind}\n"));
    }
    let data = dir.join("pool.csv");
    std::fs::write(&data, csv).unwrap();
    let spec = dir.join("spec.json");
    std::fs::write(&spec, r#"{"criteria":{"variety":{"equal_pool_optimal":{"tolerance":0}}}}"#).unwrap();
    (manifest, data, spec)
}
