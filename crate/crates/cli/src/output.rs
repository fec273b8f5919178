//! Artifact writing: tables, JSON documents and the run manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::Format;
use crate::CliError;

/// Floats in CSV cells carry 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// One table cell.
#[derive(Clone, Debug)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x)
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.into())
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Float)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => fmt_f64(*x),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Float(x) if x.is_finite() => json!(x),
            Cell::Float(x) => json!(x.to_string()),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

/// A header and rows of equal width.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(CliError::other)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv)).map_err(CliError::other)?;
        }
        w.into_inner().map_err(|e| CliError::other(e.to_string()))
    }

    fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: serde_json::Map<String, Value> =
                        self.header.iter().cloned().zip(row.iter().map(Cell::json)).collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

/// Collects the files of one run and records their hashes.
pub struct OutDir {
    root: PathBuf,
    format: Format,
    outputs: BTreeMap<String, (usize, String)>,
    inputs: BTreeMap<String, String>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl OutDir {
    pub fn create(root: &Path, format: Format) -> Result<Self, CliError> {
        std::fs::create_dir_all(root)
            .map_err(|e| CliError::other(format!("cannot create {}: {e}", root.display())))?;
        Ok(OutDir { root: root.to_path_buf(), format, outputs: BTreeMap::new(), inputs: BTreeMap::new() })
    }

    /// Records an input file by the path it was given with.
    pub fn input(&mut self, path: &str, bytes: &[u8]) {
        self.inputs.insert(path.to_string(), sha256_hex(bytes));
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::other(format!("cannot write {}: {e}", path.display())))?;
        self.outputs.insert(name.to_string(), (bytes.len(), sha256_hex(bytes)));
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &Value) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(CliError::other)?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    /// Writes `stem.csv` or `stem.json` according to the run format.
    pub fn write_table(&mut self, stem: &str, table: &Table) -> Result<String, CliError> {
        match self.format {
            Format::Csv => {
                let name = format!("{stem}.csv");
                self.write_bytes(&name, &table.to_csv()?)?;
                Ok(name)
            }
            Format::Json => {
                let name = format!("{stem}.json");
                self.write_json(&name, &table.to_json())?;
                Ok(name)
            }
        }
    }

    /// Writes `manifest.json`; it carries no timestamps so reruns match byte for byte.
    pub fn finish(mut self, command: &str) -> Result<(), CliError> {
        let inputs: Vec<Value> = self.inputs.iter().map(|(p, h)| json!({"path": p, "sha256": h})).collect();
        let outputs: Vec<Value> = self
            .outputs
            .iter()
            .map(|(name, (len, h))| json!({"file": name, "bytes": len, "sha256": h}))
            .collect();
        let manifest = json!({
            "command": command,
            "versions": {
                "multidimer": env!("CARGO_PKG_VERSION"),
                "multidimer-cli": env!("CARGO_PKG_VERSION"),
            },
            "inputs": inputs,
            "outputs": outputs,
        });
        let mut text = serde_json::to_string_pretty(&manifest).map_err(CliError::other)?;
        text.push('\n');
        let path = self.root.join("manifest.json");
        std::fs::write(&path, text).map_err(|e| CliError::other(format!("cannot write {}: {e}", path.display())))?;
        self.outputs.clear();
        Ok(())
    }
}
