//! Result tables and their CSV / JSON serialization.
//!
//! Floats are written in scientific notation with 17 significant digits, which
//! round-trips every f64; complex values occupy paired `_re`/`_im` columns.

use std::io::Write;

use serde_json::{Map, Number, Value};

use crate::linalg::{C64, Mat2};

use super::config::OutputFormat;
use super::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Self::Float(x) => format_float(*x),
            Self::Int(i) => i.to_string(),
            Self::Text(s) => s.clone(),
        }
    }

    fn to_json(&self) -> Result<Value, CliError> {
        Ok(match self {
            Self::Float(x) => Value::Number(
                format_float(*x)
                    .parse::<Number>()
                    .map_err(|_| CliError::Config(format!("non-finite output value {x}")))?,
            ),
            Self::Int(i) => Value::from(*i),
            Self::Text(s) => Value::from(s.as_str()),
        })
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Self::Float(x)
    }
}

impl From<i64> for Cell {
    fn from(i: i64) -> Self {
        Self::Int(i)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Self::Text(s.to_owned())
    }
}

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Appends `<name>_re`, `<name>_im`.
pub fn complex_columns(columns: &mut Vec<String>, name: &str) {
    columns.push(format!("{name}_re"));
    columns.push(format!("{name}_im"));
}

pub fn push_complex(row: &mut Vec<Cell>, z: C64) {
    row.push(Cell::Float(z.re));
    row.push(Cell::Float(z.im));
}

/// Columns for the entries of a 2×2 matrix in row-major order.
pub fn matrix_columns(columns: &mut Vec<String>, prefix: &str) {
    for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        complex_columns(columns, &format!("{prefix}{i}{j}"));
    }
}

pub fn push_matrix(row: &mut Vec<Cell>, m: &Mat2) {
    for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        push_complex(row, m[(i, j)]);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn with_columns(columns: &[&str]) -> Self {
        Self::new(columns.iter().map(|s| s.to_string()).collect())
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let csv_err = |e: csv::Error| CliError::Config(format!("CSV encoding failed: {e}"));
        w.write_record(&self.columns).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| CliError::Config(format!("CSV encoding failed: {e}")))
    }

    /// `{"model", "task", "columns", "rows"}` with rows as arrays.
    pub fn to_json(&self, model: &str, task: &str) -> Result<Vec<u8>, CliError> {
        let rows = self
            .rows
            .iter()
            .map(|r| r.iter().map(Cell::to_json).collect::<Result<Vec<_>, _>>().map(Value::Array))
            .collect::<Result<Vec<_>, _>>()?;
        let mut doc = Map::new();
        doc.insert("model".into(), Value::from(model));
        doc.insert("task".into(), Value::from(task));
        doc.insert("columns".into(), Value::from(self.columns.clone()));
        doc.insert("rows".into(), Value::Array(rows));
        let mut out = serde_json::to_vec_pretty(&Value::Object(doc))
            .map_err(|e| CliError::Config(format!("JSON encoding failed: {e}")))?;
        out.write_all(b"\n").expect("writing to a Vec cannot fail");
        Ok(out)
    }

    pub fn encode(&self, format: OutputFormat, model: &str, task: &str) -> Result<Vec<u8>, CliError> {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::StructuredText => self.to_json(model, task),
        }
    }
}
