//! Column-oriented per-tract table used for correlations, scatter output and
//! regression design matrices.

use crate::error::{Error, Result};
use crate::ingest::DroppedRow;

/// Canonical column names.
pub mod col {
    pub const RPV: &str = "RPV";
    pub const ZRPV: &str = "ZRPV";
    pub const PERCPOV: &str = "PERCPOV";
    pub const LN_MED_Y: &str = "lnMedY";
    pub const PERCBLK: &str = "PERCBLK";
    pub const PERCWHT: &str = "PERCWHT";
    pub const PERCVAC: &str = "PERCVAC";
    pub const RENTVAC: &str = "RENTVAC";
    pub const LN_MED_VAL: &str = "lnMedVal";
    pub const MEDRENT: &str = "MEDRENT";
    pub const LN_MED_YR: &str = "lnMedYr";
    pub const PERCRENT: &str = "PERCRENT";
}

/// Rows are tracts, cells are optional so a missing value never masquerades
/// as zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DesignTable {
    pub geoids: Vec<String>,
    columns: Vec<(String, Vec<Option<f64>>)>,
    pub dropped: Vec<DroppedRow>,
}

impl DesignTable {
    pub fn new(geoids: Vec<String>) -> Self {
        DesignTable {
            geoids,
            columns: Vec::new(),
            dropped: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.geoids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.geoids.is_empty()
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|(n, _)| n.as_str())
    }

    pub fn column(&self, name: &str) -> Result<&[Option<f64>]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    /// Adds or replaces a column.
    pub fn set_column(&mut self, name: &str, values: Vec<Option<f64>>) -> Result<()> {
        if values.len() != self.geoids.len() {
            return Err(Error::Shape(format!(
                "column {name} has {} values for {} rows",
                values.len(),
                self.geoids.len()
            )));
        }
        match self.columns.iter_mut().find(|(n, _)| n == name) {
            Some((_, v)) => *v = values,
            None => self.columns.push((name.to_string(), values)),
        }
        Ok(())
    }

    /// Indices of rows where every named column is present and finite.
    pub fn complete_rows(&self, names: &[&str]) -> Result<Vec<usize>> {
        let cols = names
            .iter()
            .map(|n| self.column(n))
            .collect::<Result<Vec<_>>>()?;
        Ok((0..self.len())
            .filter(|&i| cols.iter().all(|c| c[i].is_some_and(f64::is_finite)))
            .collect())
    }

    /// Values of `name` at `rows`; every cell must be present.
    pub fn gather(&self, name: &str, rows: &[usize]) -> Result<Vec<f64>> {
        let c = self.column(name)?;
        rows.iter()
            .map(|&i| {
                c[i].ok_or_else(|| {
                    Error::Validation(format!("missing {name} for {}", self.geoids[i]))
                })
            })
            .collect()
    }
}
