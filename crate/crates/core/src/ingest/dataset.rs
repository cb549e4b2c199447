use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::manifest::{has_errors, validate_manifest, DatasetManifest, Severity};
use super::record::{parse_json, parse_text, Record, Schema, Value};
use super::sample::SampleHandle;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Csv,
    Jsonl,
}

impl DataFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(DataFormat::Csv),
            "jsonl" | "ndjson" => Some(DataFormat::Jsonl),
            _ => None,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            DataFormat::Csv => "csv",
            DataFormat::Jsonl => "jsonl",
        }
    }
}

impl std::str::FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(DataFormat::Csv),
            "jsonl" | "ndjson" => Ok(DataFormat::Jsonl),
            _ => Err(Error::invalid(format!("unknown data format `{s}`"))),
        }
    }
}

/// A record together with its 1-based source line (row number for in-memory data).
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub line: u64,
    pub record: Record,
}

pub type RowIter<'a> = Box<dyn Iterator<Item = Result<Row>> + Send + 'a>;

#[derive(Clone, Debug)]
enum Source {
    File { path: PathBuf, format: DataFormat },
    Memory(Arc<Vec<Record>>),
}

/// An ordered, re-readable record source.
///
/// File-backed datasets are streamed on every pass; only record ids are held
/// in memory during loading (to check uniqueness).
#[derive(Clone, Debug)]
pub struct Dataset {
    source: Source,
    schema: Schema,
    epoch_seconds: f64,
    bound: Vec<String>,
    id_index: usize,
    record_count: usize,
    digest: String,
    warnings: Vec<String>,
}

/// Opens `path`, validates `manifest` against it and makes one pass to count
/// records, type-check every value and check id uniqueness.
pub fn load_dataset(path: &Path, format: DataFormat, manifest: &DatasetManifest) -> Result<Dataset> {
    check_manifest(manifest)?;
    if !path.exists() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        ));
    }
    let mut ds = Dataset {
        source: Source::File {
            path: path.to_path_buf(),
            format,
        },
        schema: manifest.schema.clone(),
        epoch_seconds: manifest.epoch_unit.as_seconds(),
        bound: manifest.bound_fields().into_iter().map(str::to_owned).collect(),
        id_index: manifest
            .schema
            .position(&manifest.record_id_field)
            .expect("validated binding"),
        record_count: 0,
        digest: String::new(),
        warnings: Vec::new(),
    };
    ds.scan()?;
    Ok(ds)
}

fn check_manifest(manifest: &DatasetManifest) -> Result<()> {
    let issues = validate_manifest(manifest, &manifest.schema);
    if has_errors(&issues) {
        let msgs: Vec<String> = issues
            .iter()
            .filter(|i| i.severity == Severity::Error)
            .map(|i| i.message.clone())
            .collect();
        return Err(Error::InvalidManifest(msgs.join("; ")));
    }
    Ok(())
}

impl Dataset {
    /// In-memory dataset. Records must already be typed per the manifest schema.
    pub fn from_records(manifest: &DatasetManifest, records: Vec<Record>) -> Result<Dataset> {
        check_manifest(manifest)?;
        if let Some((i, _)) = records
            .iter()
            .enumerate()
            .find(|(_, r)| r.values().len() != manifest.schema.len())
        {
            return Err(Error::invalid(format!("record {} does not match the schema width", i + 1)));
        }
        let mut ds = Dataset {
            source: Source::Memory(Arc::new(records)),
            schema: manifest.schema.clone(),
            epoch_seconds: manifest.epoch_unit.as_seconds(),
            bound: manifest.bound_fields().into_iter().map(str::to_owned).collect(),
            id_index: manifest
                .schema
                .position(&manifest.record_id_field)
                .expect("validated binding"),
            record_count: 0,
            digest: String::new(),
            warnings: Vec::new(),
        };
        ds.scan()?;
        Ok(ds)
    }

    fn scan(&mut self) -> Result<()> {
        let mut ids = HashSet::new();
        let mut hasher = Sha256::new();
        let mut buf = Vec::new();
        let mut count = 0usize;
        for row in self.rows()? {
            let row = row?;
            let id = row.record.get(self.id_index);
            if id.is_null() {
                return Err(Error::TypeError {
                    line: row.line,
                    field: self.schema.fields()[self.id_index].name.clone(),
                    message: "record id is empty".into(),
                });
            }
            let key = id.key().into_owned();
            if !ids.insert(key.clone()) {
                return Err(Error::DuplicateRecordId { id: key, line: row.line });
            }
            buf.clear();
            for v in row.record.values() {
                v.digest_into(&mut buf);
            }
            hasher.update(&buf);
            count += 1;
        }
        self.record_count = count;
        self.digest = hex::encode(hasher.finalize());
        if count == 0 {
            self.warnings.push("dataset has zero records".into());
        }
        Ok(())
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn record_count(&self) -> usize {
        self.record_count
    }

    pub fn is_empty(&self) -> bool {
        self.record_count == 0
    }

    /// SHA-256 over the typed record sequence, fixed at load time.
    pub fn content_digest(&self) -> &str {
        &self.digest
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn path(&self) -> Option<&Path> {
        match &self.source {
            Source::File { path, .. } => Some(path),
            Source::Memory(_) => None,
        }
    }

    pub fn format(&self) -> Option<DataFormat> {
        match &self.source {
            Source::File { format, .. } => Some(*format),
            Source::Memory(_) => None,
        }
    }

    pub fn record_id<'r>(&self, r: &'r Record) -> std::borrow::Cow<'r, str> {
        r.get(self.id_index).key()
    }

    /// Opens a fresh cursor over the records in source order.
    pub fn rows(&self) -> Result<RowIter<'_>> {
        match &self.source {
            Source::Memory(records) => Ok(Box::new(records.iter().enumerate().map(|(i, r)| {
                Ok(Row {
                    line: i as u64 + 1,
                    record: r.clone(),
                })
            }))),
            Source::File { path, format } => {
                let file = File::open(path).map_err(|e| Error::io(path, e))?;
                match format {
                    DataFormat::Csv => self.csv_rows(file),
                    DataFormat::Jsonl => Ok(self.jsonl_rows(path.clone(), file)),
                }
            }
        }
    }

    fn csv_rows(&self, file: File) -> Result<RowIter<'_>> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(BufReader::new(file));
        let headers = rdr.headers()?.clone();
        let mut columns = Vec::with_capacity(self.schema.len());
        for def in self.schema.fields() {
            match headers.iter().position(|h| h == def.name) {
                Some(c) => columns.push(c),
                None => return Err(Error::MissingField { field: def.name.clone() }),
            }
        }
        let schema = &self.schema;
        let epoch = self.epoch_seconds;
        let mut record = csv::StringRecord::new();
        let mut done = false;
        Ok(Box::new(std::iter::from_fn(move || {
            if done {
                return None;
            }
            match rdr.read_record(&mut record) {
                Ok(false) => {
                    done = true;
                    None
                }
                Err(e) => {
                    done = true;
                    Some(Err(e.into()))
                }
                Ok(true) => {
                    let line = record.position().map_or(0, |p| p.line());
                    let mut values = Vec::with_capacity(columns.len());
                    for (def, &c) in schema.fields().iter().zip(&columns) {
                        let cell = record.get(c).unwrap_or("");
                        match parse_text(def.kind, cell, epoch) {
                            Ok(v) => values.push(v),
                            Err(message) => {
                                done = true;
                                return Some(Err(Error::TypeError {
                                    line,
                                    field: def.name.clone(),
                                    message,
                                }));
                            }
                        }
                    }
                    Some(Ok(Row {
                        line,
                        record: Record::new(values),
                    }))
                }
            }
        })))
    }

    fn jsonl_rows(&self, path: PathBuf, file: File) -> RowIter<'_> {
        let schema = &self.schema;
        let bound = &self.bound;
        let epoch = self.epoch_seconds;
        let mut lines = BufReader::new(file).lines().enumerate();
        let mut done = false;
        Box::new(std::iter::from_fn(move || loop {
            if done {
                return None;
            }
            let (i, line) = lines.next()?;
            let line_no = i as u64 + 1;
            let text = match line {
                Ok(t) => t,
                Err(e) => {
                    done = true;
                    return Some(Err(Error::io(&path, e)));
                }
            };
            if text.trim().is_empty() {
                continue;
            }
            let fail = |message: String| Error::TypeError {
                line: line_no,
                field: String::new(),
                message,
            };
            let obj = match serde_json::from_str::<serde_json::Value>(&text) {
                Ok(serde_json::Value::Object(o)) => o,
                Ok(_) => {
                    done = true;
                    return Some(Err(fail("line is not a JSON object".into())));
                }
                Err(e) => {
                    done = true;
                    return Some(Err(fail(format!("invalid JSON: {e}"))));
                }
            };
            let mut values = Vec::with_capacity(schema.len());
            for def in schema.fields() {
                let v = match obj.get(&def.name) {
                    Some(v) => parse_json(def.kind, v, epoch),
                    None if bound.contains(&def.name) => {
                        done = true;
                        return Some(Err(Error::MissingField { field: def.name.clone() }));
                    }
                    None => Ok(Value::Null),
                };
                match v {
                    Ok(v) => values.push(v),
                    Err(message) => {
                        done = true;
                        return Some(Err(Error::TypeError {
                            line: line_no,
                            field: def.name.clone(),
                            message,
                        }));
                    }
                }
            }
            return Some(Ok(Row {
                line: line_no,
                record: Record::new(values),
            }));
        }))
    }

    /// Reads every record into memory.
    pub fn materialize(&self) -> Result<Vec<Record>> {
        match &self.source {
            Source::Memory(records) => Ok(records.as_ref().clone()),
            Source::File { .. } => self.rows()?.map(|r| r.map(|row| row.record)).collect(),
        }
    }

    /// In-memory dataset holding only the records in `handle`.
    pub fn subset(&self, manifest: &DatasetManifest, handle: &SampleHandle) -> Result<Dataset> {
        let picked = self.select_records(handle)?;
        Dataset::from_records(manifest, picked)
    }

    pub fn select_records(&self, handle: &SampleHandle) -> Result<Vec<Record>> {
        let mut wanted = handle.sorted_indices().into_iter().peekable();
        let mut out = Vec::with_capacity(handle.len());
        for (i, row) in self.rows()?.enumerate() {
            if wanted.peek().is_none() {
                break;
            }
            let row = row?;
            if wanted.peek() == Some(&i) {
                out.push(row.record);
                wanted.next();
            }
        }
        if let Some(i) = wanted.next() {
            return Err(Error::invalid(format!("index {i} is out of bounds")));
        }
        Ok(out)
    }

    /// Recomputes the content digest from a fresh pass; `true` when the source
    /// still yields the same record sequence.
    pub fn verify_stable(&self) -> Result<bool> {
        let mut probe = self.clone();
        probe.scan()?;
        Ok(probe.digest == self.digest && probe.record_count == self.record_count)
    }

    /// Writes one record id per line, in source order.
    pub fn write_ids(&self, handle: &SampleHandle, out: &mut dyn Write) -> Result<()> {
        for r in self.select_records(handle)? {
            writeln!(out, "{}", self.record_id(&r)).map_err(|e| Error::io("<ids>", e))?;
        }
        Ok(())
    }

    /// Writes the selected records in source order. File-backed sources are
    /// copied byte-for-byte (header included for CSV).
    pub fn write_subset(&self, handle: &SampleHandle, out: &mut dyn Write) -> Result<()> {
        let wanted = handle.sorted_indices();
        match &self.source {
            Source::Memory(records) => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(self.schema.fields().iter().map(|f| f.name.as_str()))?;
                for &i in &wanted {
                    let r = records
                        .get(i)
                        .ok_or_else(|| Error::invalid(format!("index {i} is out of bounds")))?;
                    w.write_record(r.values().iter().map(Value::to_csv_cell))?;
                }
                w.flush().map_err(|e| Error::io("<subset>", e))?;
                Ok(())
            }
            Source::File { path, format } => {
                let mut bytes = Vec::new();
                File::open(path)
                    .and_then(|mut f| f.read_to_end(&mut bytes))
                    .map_err(|e| Error::io(path, e))?;
                let spans = record_spans(&bytes, *format)?;
                let io = |e| Error::io("<subset>", e);
                if let (DataFormat::Csv, Some(first)) = (format, spans.first()) {
                    out.write_all(&bytes[..first.0]).map_err(io)?;
                } else if *format == DataFormat::Csv {
                    out.write_all(&bytes).map_err(io)?;
                }
                for &i in &wanted {
                    let (start, end) = *spans
                        .get(i)
                        .ok_or_else(|| Error::invalid(format!("index {i} is out of bounds")))?;
                    let chunk = &bytes[start..end];
                    out.write_all(chunk).map_err(io)?;
                    if !chunk.ends_with(b"\n") {
                        out.write_all(b"\n").map_err(io)?;
                    }
                }
                Ok(())
            }
        }
    }
}

/// Byte span of every record in a raw file.
fn record_spans(bytes: &[u8], format: DataFormat) -> Result<Vec<(usize, usize)>> {
    match format {
        DataFormat::Csv => {
            let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
            rdr.headers()?;
            let mut starts = Vec::new();
            let mut rec = csv::ByteRecord::new();
            loop {
                let start = rdr.position().byte() as usize;
                if !rdr.read_byte_record(&mut rec)? {
                    break;
                }
                starts.push(start);
            }
            let mut spans = Vec::with_capacity(starts.len());
            for (k, &s) in starts.iter().enumerate() {
                let end = starts.get(k + 1).copied().unwrap_or(bytes.len());
                spans.push((s, end));
            }
            Ok(spans)
        }
        DataFormat::Jsonl => {
            let mut spans = Vec::new();
            let mut start = 0;
            for (i, b) in bytes.iter().enumerate() {
                if *b == b'\n' {
                    if !bytes[start..i].iter().all(u8::is_ascii_whitespace) {
                        spans.push((start, i + 1));
                    }
                    start = i + 1;
                }
            }
            if start < bytes.len() && !bytes[start..].iter().all(u8::is_ascii_whitespace) {
                spans.push((start, bytes.len()));
            }
            Ok(spans)
        }
    }
}
