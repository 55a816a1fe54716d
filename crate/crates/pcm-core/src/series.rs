//! Hourly time-series container aligned to a simulation calendar.

use crate::calendar::Timestamp;

/// A named-column table of hourly values. Column order is insertion order
/// and is preserved through serialization for determinism.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SeriesTable {
    columns: Vec<(String, Vec<f64>)>,
}

impl SeriesTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_column(&mut self, key: &str, values: Vec<f64>) {
        if let Some(entry) = self.columns.iter_mut().find(|(k, _)| k == key) {
            entry.1 = values;
        } else {
            self.columns.push((key.to_string(), values));
        }
    }

    pub fn column(&self, key: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.columns.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|(k, _)| k.as_str())
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// Test helper: shorten one column to force a length-mismatch violation.
    pub fn truncate_column(&mut self, key: &str, len: usize) {
        if let Some(entry) = self.columns.iter_mut().find(|(k, _)| k == key) {
            entry.1.truncate(len);
        }
    }

    /// Test helper: drop every column not listed.
    pub fn retain_columns(&mut self, keep: &[String]) {
        self.columns.retain(|(k, _)| keep.iter().any(|x| x == k));
    }
}

/// Hourly load, VRE availability and reserve requirements for a simulation
/// span starting at `start`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesFrame {
    pub start: Timestamp,
    pub hours: usize,
    /// MW demand per zone id.
    pub load: SeriesTable,
    /// MW available per VRE series key.
    pub availability: SeriesTable,
    /// MW required per reserve-product series key.
    pub reserve_requirements: SeriesTable,
}

impl TimeSeriesFrame {
    pub fn new(start: Timestamp, hours: usize) -> Self {
        TimeSeriesFrame {
            start,
            hours,
            load: SeriesTable::new(),
            availability: SeriesTable::new(),
            reserve_requirements: SeriesTable::new(),
        }
    }

    pub fn timestamp_at(&self, hour: usize) -> Timestamp {
        self.start.plus_hours(hour as i64)
    }
}
