use std::io::Write;
use std::path::Path;

use qwalk::fmt17;
use serde::Serialize;
use serde_json::{json, Value};

pub const VERSION: &str = concat!("qwalk ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// A table with self-describing metadata.
#[derive(Debug, Clone)]
pub struct Table {
    pub command: &'static str,
    pub config: Value,
    pub tolerances: Value,
    /// Extra `key: value` lines for the header.
    pub meta: Vec<(String, Value)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(usize),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => fmt17(*x),
            Cell::Int(k) => k.to_string(),
            Cell::Text(s) => s.replace([',', '\n'], ";"),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => json!(x),
            Cell::Num(x) => json!(x.to_string()),
            Cell::Int(k) => json!(k),
            Cell::Text(s) => json!(s),
        }
    }
}

impl Table {
    pub fn new(command: &'static str, config: Value, tolerances: Value, columns: Vec<&'static str>) -> Self {
        Table {
            command,
            config,
            tolerances,
            meta: Vec::new(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl Serialize) {
        self.meta.push((key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null)));
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.render_csv(),
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| {
                        Value::Object(
                            self.columns
                                .iter()
                                .zip(r)
                                .map(|(c, v)| (c.to_string(), v.json()))
                                .collect(),
                        )
                    })
                    .collect();
                let meta: serde_json::Map<String, Value> = self.meta.iter().cloned().collect();
                let doc = json!({
                    "version": VERSION,
                    "command": self.command,
                    "config": self.config,
                    "tolerances": self.tolerances,
                    "meta": meta,
                    "rows": rows,
                });
                pretty(&doc)
            }
        }
    }

    fn render_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# {VERSION}\n# command: {}\n", self.command));
        out.push_str(&format!("# config: {}\n", self.config));
        out.push_str(&format!("# tolerances: {}\n", self.tolerances));
        for (k, v) in &self.meta {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values always serialize");
    s.push('\n');
    s
}

/// Writes to `path` through a temporary file in the same directory, or to stdout.
pub fn emit(path: Option<&Path>, text: &str) -> std::io::Result<()> {
    match path {
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            tmp.write_all(text.as_bytes())?;
            tmp.as_file().sync_all()?;
            tmp.persist(path).map_err(|e| e.error)?;
            Ok(())
        }
    }
}
