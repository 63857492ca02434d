use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::{Map, Value};

use crate::Format;

/// One CSV cell. Floats are written in shortest round-trip form.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else if v != 0.0 && (v.abs() < 1e-5 || v.abs() >= 1e16) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(v) => format_float(*v),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => Value::from(*i),
            // Non-finite numbers have no JSON literal; keep their text.
            Cell::Num(v) if v.is_finite() => Value::from(*v),
            Cell::Num(v) => Value::from(format_float(*v)),
            Cell::Text(s) => Value::from(s.clone()),
        }
    }
}

/// A rectangular result with a fixed header.
#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(columns: &[S]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::text))?;
        }
        Ok(String::from_utf8(w.into_inner().context("flushing CSV")?)?)
    }

    /// Array of row objects.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = self.columns.iter().cloned().zip(row.iter().map(Cell::json)).collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => json_text(&self.to_json()),
        }
    }
}

/// Pretty JSON with sorted object keys and a trailing newline.
pub fn json_text(v: &Value) -> Result<String> {
    // serde_json maps are ordered by key, so re-parsing sorts them.
    let sorted: Value = serde_json::from_str(&v.to_string())?;
    let mut s = serde_json::to_string_pretty(&sorted)?;
    s.push('\n');
    Ok(s)
}

/// Flattens a JSON document into `key,value` rows with dotted keys.
pub fn flatten(v: &Value) -> Table {
    fn walk(prefix: &str, v: &Value, t: &mut Table) {
        let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
        match v {
            Value::Object(m) => m.iter().for_each(|(k, v)| walk(&key(k), v, t)),
            Value::Array(a) => a.iter().enumerate().for_each(|(i, v)| walk(&key(&i.to_string()), v, t)),
            Value::Null => t.push(vec![prefix.into(), "".into()]),
            Value::String(s) => t.push(vec![prefix.into(), s.as_str().into()]),
            Value::Bool(b) => t.push(vec![prefix.into(), b.to_string().into()]),
            Value::Number(n) => t.push(vec![prefix.into(), n.as_f64().map(Cell::Num).unwrap_or(Cell::Text(n.to_string()))]),
        }
    }
    let mut t = Table::new(&["key", "value"]);
    walk("", v, &mut t);
    t
}

/// Renders a JSON document in the requested format.
pub fn render_value(v: &Value, format: Format) -> Result<String> {
    match format {
        Format::Json => json_text(v),
        Format::Csv => flatten(v).to_csv(),
    }
}

/// Writes to `path`, or to stdout when no path is given.
pub fn write_out(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}
