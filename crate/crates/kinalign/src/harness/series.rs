//! Time-stamped observable records with self-describing metadata.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Tabular run output: fixed column schema, strictly increasing time in the
/// first column, and a metadata block carried with the table.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSeries {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub metadata: BTreeMap<String, String>,
}

impl RunSeries {
    pub fn new(columns: Vec<String>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Config(format!(
                "row has {} entries, schema has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        if let Some(last) = self.rows.last() {
            if row[0] <= last[0] {
                return Err(Error::Config(format!(
                    "time must strictly increase: {} after {}",
                    row[0], last[0]
                )));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r[0]).collect()
    }

    pub fn set_meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.insert(key.to_string(), value.to_string());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_schema_and_time_violations() {
        let mut s = RunSeries::new(vec!["t".into(), "m".into()]);
        s.push_row(vec![0.0, 1.0]).unwrap();
        assert!(s.push_row(vec![0.5]).is_err());
        assert!(s.push_row(vec![0.0, 2.0]).is_err());
        s.push_row(vec![0.5, 2.0]).unwrap();
        assert_eq!(s.column("m").unwrap(), vec![1.0, 2.0]);
    }
}
