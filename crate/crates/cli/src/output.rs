//! CSV tables and JSON summaries.

use std::fs;
use std::path::Path;

use serde::Serialize;
use thinspec::TimeSeries;

use crate::error::{CliError, CliResult};

/// A named table of numeric columns. Headers carry units as `name[unit]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, headers: &[(&str, &str)]) -> Self {
        Table {
            name: name.to_string(),
            headers: headers.iter().map(|(n, u)| format!("{n}[{u}]")).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    /// A time series as a table whose first column is `t[time]`.
    pub fn from_series(name: &str, s: &TimeSeries) -> Self {
        let mut headers = vec!["t[time]".to_string()];
        headers.extend(s.columns.iter().map(|c| format!("{}[{}]", c.name, c.unit)));
        let rows = (0..s.len())
            .map(|i| {
                let mut r = vec![s.t[i]];
                r.extend(s.columns.iter().map(|c| c.values[i]));
                r
            })
            .collect();
        Table {
            name: name.to_string(),
            headers,
            rows,
        }
    }

    /// Adds a column computed from each existing row.
    pub fn with_column<F: Fn(&[f64]) -> f64>(mut self, header: &str, unit: &str, f: F) -> Self {
        self.headers.push(format!("{header}[{unit}]"));
        for r in self.rows.iter_mut() {
            let v = f(r);
            r.push(v);
        }
        self
    }

    pub fn to_csv(&self) -> CliResult<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| CliError::Config(format!("csv: {e}"));
        w.write_record(&self.headers).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|v| format_value(*v))).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| CliError::Config(format!("csv: {e}")))
    }
}

/// Shortest round-trip decimal; non-finite values as `NaN`, `inf`, `-inf`.
pub fn format_value(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v:?}")
    }
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}
