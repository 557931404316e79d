//! Sampled trajectories of scalar observables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub unit: String,
    pub values: Vec<f64>,
}

/// Named columns sampled on a shared time grid.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TimeSeries {
    pub t: Vec<f64>,
    pub columns: Vec<Column>,
}

impl TimeSeries {
    pub fn new(t: Vec<f64>) -> Self {
        TimeSeries { t, columns: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn push(&mut self, name: &str, unit: &str, values: Vec<f64>) -> Result<()> {
        if values.len() != self.t.len() {
            return Err(Error::Grid(format!(
                "column {name} has {} samples, time grid has {}",
                values.len(),
                self.t.len()
            )));
        }
        if self.column(name).is_some() {
            return Err(Error::Grid(format!("duplicate column {name}")));
        }
        self.columns.push(Column {
            name: name.to_string(),
            unit: unit.to_string(),
            values,
        });
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().find(|c| c.name == name).map(|c| c.values.as_slice())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }
}
