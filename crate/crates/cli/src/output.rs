//! Tabular results and their JSON and CSV encodings.

use std::io::Write;

use serde_json::{json, Map, Value};

use crate::config::Format;
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    fn json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(_) | Cell::Empty => Value::Null,
            Cell::Int(v) => json!(v),
            Cell::Bool(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }

    fn csv(&self) -> String {
        match self {
            Cell::Num(v) if v.is_finite() => format!("{v:?}"),
            Cell::Num(_) | Cell::Empty => String::new(),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// Named columns and rows in output order; numbers are written in shortest round-trip form.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: &'static str,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Report {
    pub fn new(command: &'static str, columns: Vec<String>) -> Self {
        Report { command, columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let mut m = Map::new();
                for (c, v) in self.columns.iter().zip(r) {
                    m.insert(c.clone(), v.json());
                }
                Value::Object(m)
            })
            .collect();
        json!({ "command": self.command, "columns": self.columns, "rows": rows })
    }

    pub fn write<W: Write>(&self, format: Format, mut out: W) -> Result<(), CliError> {
        let io = |e: std::io::Error| CliError::Io(e.to_string());
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut out, &self.to_json()).map_err(|e| CliError::Io(e.to_string()))?;
                writeln!(out).map_err(io)
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(out);
                let csv_err = |e: csv::Error| CliError::Io(e.to_string());
                w.write_record(&self.columns).map_err(csv_err)?;
                for r in &self.rows {
                    w.write_record(r.iter().map(Cell::csv)).map_err(csv_err)?;
                }
                w.flush().map_err(io)
            }
        }
    }
}

/// Column names `{prefix}{jk}_re, {prefix}{jk}_im` for a `dim × dim` matrix, row-major.
pub fn matrix_columns(prefix: &str, dim: usize) -> Vec<String> {
    let mut out = Vec::new();
    for j in 1..=dim {
        for k in 1..=dim {
            out.push(format!("{prefix}{j}{k}_re"));
            out.push(format!("{prefix}{j}{k}_im"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encodings_agree() {
        let mut r = Report::new("t", vec!["a".into(), "b".into(), "error".into()]);
        r.push(vec![Cell::Num(0.1), Cell::Num(f64::NAN), Cell::Text("x, \"y\"".into())]);
        let mut csv_bytes = Vec::new();
        r.write(Format::Csv, &mut csv_bytes).unwrap();
        let text = String::from_utf8(csv_bytes).unwrap();
        assert_eq!(text, "a,b,error\n0.1,,\"x, \"\"y\"\"\"\n");
        let v = r.to_json();
        assert_eq!(v["rows"][0]["a"], json!(0.1));
        assert!(v["rows"][0]["b"].is_null());
    }

    #[test]
    fn matrix_column_names() {
        assert_eq!(matrix_columns("M", 1), vec!["M11_re", "M11_im"]);
        assert_eq!(matrix_columns("K", 2)[6], "K22_re");
    }
}
