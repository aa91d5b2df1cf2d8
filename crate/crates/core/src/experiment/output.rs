//! Result files: CSV tables carrying provenance columns, JSON summaries, atomic writes.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// Shortest round-trip decimal; NaN becomes an empty field.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x}")
    }
}

/// JSON number, or `null` when not finite.
pub fn json_f64(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

/// A CSV table whose rows are prefixed by `config_hash` and `seed`.
#[derive(Debug, Clone)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    hash: String,
    seed: u64,
}

impl Table {
    pub fn new(hash: &str, seed: u64, columns: &[&str]) -> Self {
        Self { header: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new(), hash: hash.to_string(), seed }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["config_hash".to_string(), "seed".to_string()];
        header.extend(self.header.iter().cloned());
        w.write_record(&header)?;
        let seed = self.seed.to_string();
        for row in &self.rows {
            w.write_record(std::iter::once(self.hash.as_str()).chain(std::iter::once(seed.as_str())).chain(row.iter().map(String::as_str)))?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

/// Writes `bytes` to a temporary file next to `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Collects the files of one run and writes them atomically.
#[derive(Debug)]
pub struct OutputSet {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputSet {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn table(&mut self, name: &str, table: &Table) -> Result<()> {
        self.bytes(name, &table.to_bytes()?)
    }

    pub fn bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes)?;
        self.written.push(path);
        Ok(())
    }

    pub fn into_files(self) -> Vec<PathBuf> {
        self.written
    }
}

/// The summary document with its fixed key set.
pub fn summary_json(experiment: &str, hash: &str, seed: u64, estimates: Map<String, Value>, references: Map<String, Value>, pass: bool) -> Value {
    let mut doc = Map::new();
    doc.insert("experiment".into(), Value::String(experiment.into()));
    doc.insert("config_hash".into(), Value::String(hash.into()));
    doc.insert("seed".into(), Value::from(seed));
    doc.insert("estimates".into(), Value::Object(estimates));
    doc.insert("references".into(), Value::Object(references));
    doc.insert("pass".into(), Value::Bool(pass));
    Value::Object(doc)
}
