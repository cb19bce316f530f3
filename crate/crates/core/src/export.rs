//! CSV and JSON serialization with fixed, locale-independent formatting.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::RateRow;
use crate::stein::SupNormRow;
use crate::zerobias::IntervalRow;

/// A value that can appear in a CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// 17 significant digits, which round-trips every `f64`.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.16e}")
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Float(v) => f.write_str(&format_float(*v)),
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Bool(b) => write!(f, "{b}"),
        }
    }
}

/// Rows that have a fixed CSV layout.
pub trait CsvRecord {
    fn header() -> &'static [&'static str];
    fn cells(&self) -> Vec<Cell>;
}

impl CsvRecord for RateRow {
    fn header() -> &'static [&'static str] {
        &[
            "N",
            "dw",
            "dk",
            "x1",
            "e_abs",
            "e_wabs",
            "e_inv",
            "e_ratio",
            "rhs_bound",
            "ratio_dw",
        ]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![
            self.n.into(),
            self.dw.into(),
            self.dk.into(),
            self.x1.into(),
            self.e_abs.into(),
            self.e_wabs.into(),
            self.e_inv.into(),
            self.e_ratio.into(),
            self.rhs_bound.into(),
            self.ratio_dw.into(),
        ]
    }
}

impl CsvRecord for IntervalRow {
    fn header() -> &'static [&'static str] {
        &["interval_left", "interval_right", "coeff", "mass"]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![
            self.interval_left.into(),
            self.interval_right.into(),
            self.coeff.into(),
            self.mass.into(),
        ]
    }
}

impl CsvRecord for SupNormRow {
    fn header() -> &'static [&'static str] {
        &[
            "h_name", "c", "sup_g", "sup_dg", "sup_chi", "sup_dchi", "bound_3c", "bound_4c",
            "bound_6c", "bound_7c", "pass",
        ]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![
            self.h_name.as_str().into(),
            self.c.into(),
            self.sup_g.into(),
            self.sup_dg.into(),
            self.sup_chi.into(),
            self.sup_dchi.into(),
            self.bound_3c.into(),
            self.bound_4c.into(),
            self.bound_6c.into(),
            self.bound_7c.into(),
            self.pass.into(),
        ]
    }
}

/// CSV with `,` separators and LF line endings.
pub fn csv_string(header: &[&str], rows: &[Vec<Cell>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(Cell::to_string).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn records_to_csv<R: CsvRecord>(rows: &[R]) -> String {
    let cells: Vec<Vec<Cell>> = rows.iter().map(CsvRecord::cells).collect();
    csv_string(R::header(), &cells)
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::InvalidInput(e.to_string()))
}

/// Writes `contents` to `path`, or to stdout when `path` is `None`.
pub fn write_output(contents: &str, path: Option<&Path>) -> std::io::Result<usize> {
    match path {
        Some(p) => {
            std::fs::write(p, contents)
                .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", p.display())))?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(contents.len())
}
