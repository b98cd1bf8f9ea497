//! Result tables, summary records and atomic file writes.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{BenchError, BenchResult};

/// A cell in a result table. Floats print in shortest round-trip form.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Str(String),
    Int(i128),
    Float(f64),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Str(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => x.to_string(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Str(s.to_string())
    }
}
impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Str(s)
    }
}
impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}
impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i128)
    }
}
impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i128)
    }
}
impl From<u128> for Cell {
    fn from(x: u128) -> Self {
        Cell::Int(x as i128)
    }
}
impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Str(b.to_string())
    }
}
impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(o: Option<T>) -> Self {
        o.map_or(Cell::Empty, Into::into)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.to_string(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width mismatch in table {}", self.name);
        self.rows.push(row);
    }

    /// CSV bytes with a trailing `config_hash` column.
    pub fn to_csv(&self, config_hash: &str) -> BenchResult<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = self.header.clone();
        header.push("config_hash".into());
        w.write_record(&header).map_err(|e| BenchError::io(&self.name, e))?;
        for row in &self.rows {
            let mut rec: Vec<String> = row.iter().map(Cell::render).collect();
            rec.push(config_hash.to_string());
            w.write_record(&rec).map_err(|e| BenchError::io(&self.name, e))?;
        }
        w.into_inner().map_err(|e| BenchError::io(&self.name, e))
    }

    /// Rows as JSON objects keyed by column name.
    pub fn to_json(&self, config_hash: &str) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut obj = serde_json::Map::new();
                for (k, c) in self.header.iter().zip(row) {
                    let v = match c {
                        Cell::Str(s) => Value::from(s.clone()),
                        Cell::Int(i) => serde_json::Number::from_i128(*i).map_or(Value::Null, Value::Number),
                        Cell::Float(x) => serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number),
                        Cell::Empty => Value::Null,
                    };
                    obj.insert(k.clone(), v);
                }
                obj.insert("config_hash".into(), Value::from(config_hash));
                Value::Object(obj)
            })
            .collect();
        Value::Array(rows)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// One named check against a threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub threshold: String,
    pub passed: bool,
}

impl Check {
    pub fn new(name: &str, measured: f64, threshold: impl Into<String>, passed: bool) -> Self {
        Check { name: name.to_string(), measured, threshold: threshold.into(), passed }
    }
}

/// Written to `summary.json` next to the tables of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub experiment_id: String,
    pub kind: String,
    pub config_hash: String,
    pub input_hash: String,
    pub toolkit_version: String,
    pub metrics: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
    pub files: Vec<String>,
    pub wall_time_s: f64,
}

impl ResultRecord {
    pub fn failed_checks(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn load(path: &Path) -> BenchResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| BenchError::Validation(format!("{}: {e}", path.display())))
    }
}

/// Write through a sibling temp file and rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> BenchResult<()> {
    let dir = path.parent().ok_or_else(|| BenchError::io(path, "no parent directory"))?;
    fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    let file_name = path.file_name().and_then(|s| s.to_str()).ok_or_else(|| BenchError::io(path, "bad file name"))?;
    let tmp = dir.join(format!(".{file_name}.tmp{}", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(|e| BenchError::io(&tmp, e))?;
    f.write_all(bytes).and_then(|_| f.sync_all()).map_err(|e| BenchError::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| BenchError::io(path, e))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> BenchResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| BenchError::io(path, e))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// The directory owned by one experiment: `<root>/<id>/`.
#[derive(Debug, Clone)]
pub struct ExperimentDir {
    dir: PathBuf,
}

impl ExperimentDir {
    pub fn new(root: &Path, id: &str) -> Self {
        ExperimentDir { dir: root.join(id) }
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    /// Write `table` in the requested format and return the file name.
    pub fn write_table(&self, table: &Table, config_hash: &str, format: Format) -> BenchResult<String> {
        match format {
            Format::Csv => {
                let name = format!("{}.csv", table.name);
                write_atomic(&self.dir.join(&name), &table.to_csv(config_hash)?)?;
                Ok(name)
            }
            Format::Json => {
                let name = format!("{}.json", table.name);
                write_json(&self.dir.join(&name), &table.to_json(config_hash))?;
                Ok(name)
            }
        }
    }

    pub fn write_record(&self, record: &ResultRecord) -> BenchResult<()> {
        write_json(&self.dir.join("summary.json"), record)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_appends_hash_and_formats_cells() {
        let mut t = Table::new("t", &["a", "b", "c"]);
        t.push(vec![Cell::from(0.1), Cell::from(3usize), Cell::from(None::<f64>)]);
        let s = String::from_utf8(t.to_csv("abc").unwrap()).unwrap();
        assert_eq!(s, "a,b,c,config_hash\n0.1,3,,abc\n");
        let j = t.to_json("abc");
        assert_eq!(j[0]["b"], 3);
        assert!(j[0]["c"].is_null());
    }

    #[test]
    #[should_panic]
    fn ragged_row_panics() {
        Table::new("t", &["a"]).push(vec![]);
    }

    #[test]
    fn atomic_write_leaves_no_temp_file() {
        let dir = std::env::temp_dir().join(format!("heftva-out-{}", std::process::id()));
        let p = dir.join("x").join("f.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        let entries: Vec<_> = fs::read_dir(dir.join("x")).unwrap().collect();
        assert_eq!(entries.len(), 1);
        fs::remove_dir_all(dir).unwrap();
    }
}
