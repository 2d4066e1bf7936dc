//! Run directory layout: `MANIFEST.json` first, then tables, then the final
//! manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::failure::Failure;

pub const MANIFEST: &str = "MANIFEST.json";

/// A CSV table held in memory until the task has finished.
pub struct Table {
    pub file: &'static str,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file: &'static str, header: &[&str]) -> Self {
        Self { file, header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Shortest representation that reads back to the same `f64`; exponent
/// form for very small or large magnitudes.
pub fn num(x: f64) -> String {
    let m = x.abs();
    if m != 0.0 && m.is_finite() && !(1e-4..1e15).contains(&m) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Components joined with `;`.
pub fn vector(v: &[f64]) -> String {
    v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(";")
}

#[derive(Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    /// Extra JSON files next to the tables.
    pub documents: Vec<(&'static str, Value)>,
    pub diagnostics: Map<String, Value>,
    pub cutoff_bounds: Option<Value>,
    pub assumption_norms: Option<Value>,
    /// Set when the task's own check did not hold; tables are still written.
    pub check_failed: Option<String>,
}

impl Outcome {
    pub fn diag(&mut self, key: &str, value: impl Serialize) {
        self.diagnostics.insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }
}

pub struct Manifest {
    path: PathBuf,
    body: Map<String, Value>,
}

impl Manifest {
    pub fn new(dir: &Path, config_path: &Path, config: &impl Serialize, task: &str, seed: Option<u64>) -> Result<Self, Failure> {
        let mut body = Map::new();
        body.insert("tool".into(), json!("hyperlace"));
        body.insert("cli_version".into(), json!(env!("CARGO_PKG_VERSION")));
        body.insert("core_version".into(), json!(hyperlace::VERSION));
        body.insert("task".into(), json!(task));
        body.insert("seed".into(), json!(seed));
        body.insert("config_path".into(), json!(config_path.display().to_string()));
        body.insert("config".into(), serde_json::to_value(config)?);
        body.insert("status".into(), json!("running"));
        Ok(Self { path: dir.join(MANIFEST), body })
    }

    pub fn set(&mut self, key: &str, value: Value) {
        self.body.insert(key.to_string(), value);
    }

    /// Replaces the manifest atomically.
    pub fn write(&self) -> Result<(), Failure> {
        let tmp = self.path.with_extension("json.tmp");
        {
            let mut w = BufWriter::new(File::create(&tmp)?);
            serde_json::to_writer_pretty(&mut w, &Value::Object(self.body.clone()))?;
            w.write_all(b"\n")?;
            w.flush()?;
        }
        std::fs::rename(&tmp, &self.path)?;
        Ok(())
    }
}

pub fn write_table(dir: &Path, table: &Table) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(dir.join(table.file))?;
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_document(dir: &Path, name: &str, value: &Value) -> Result<(), Failure> {
    let mut w = BufWriter::new(File::create(dir.join(name))?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}
