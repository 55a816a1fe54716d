//! File formats: the system descriptor, time-series CSVs, results
//! directories, and plot-data exports.
//!
//! Everything is delimited text or TOML on purpose: degeneracy forensics
//! lives on diffs, so results must be byte-stable across reruns.

mod descriptor;
mod ledger_io;
mod report_io;
mod series_io;

pub use descriptor::{read_system, system_to_toml, write_system};
pub use ledger_io::{read_ledger, write_ledger, write_prices, read_prices, LEDGER_FILES};
pub use report_io::{write_comparison, write_report};
pub use series_io::{read_series_dir, series_digest, unknown_columns as unknown_series_columns, write_series_dir, SERIES_FILES};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("{path}: {reason}")]
    Format { path: String, reason: String },
    #[error("system descriptor: {0}")]
    Descriptor(String),
    #[error("results directory {dir}: {reason}")]
    Ledger { dir: String, reason: String },
}

impl IoError {
    pub(crate) fn file(path: &std::path::Path, source: std::io::Error) -> Self {
        IoError::File {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Hex SHA-256 of a byte string; input digests in run manifests.
pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let out = hasher.finalize();
    let mut s = String::with_capacity(64);
    for b in out {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

/// Shortest round-trip decimal form of a float, for stable text output.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v}")
}
