//! Time-series CSV files: one per family (`load.csv`, `availability.csv`,
//! `reserves.csv`), first column an ISO-8601 hour stamp, one column per
//! entity id, values in MW.

use super::{fmt_f64, sha256_hex, IoError};
use crate::calendar::Timestamp;
use crate::series::{SeriesTable, TimeSeriesFrame};
use crate::system::SystemSpec;
use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

pub const SERIES_FILES: [&str; 3] = ["load.csv", "availability.csv", "reserves.csv"];

fn table_to_csv(start: Timestamp, hours: usize, table: &SeriesTable) -> String {
    let mut out = String::new();
    out.push_str("timestamp");
    for key in table.keys() {
        out.push(',');
        out.push_str(key);
    }
    out.push('\n');
    for h in 0..hours {
        let _ = write!(out, "{}", start.plus_hours(h as i64));
        for (_, col) in table.iter() {
            out.push(',');
            out.push_str(&fmt_f64(col[h]));
        }
        out.push('\n');
    }
    out
}

fn parse_table(path: &Path, text: &str) -> Result<(Option<Timestamp>, usize, SeriesTable), IoError> {
    let p = path.display().to_string();
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| IoError::Format {
        path: p.clone(),
        reason: "empty file".into(),
    })?;
    let mut fields = header.split(',');
    let first = fields.next().unwrap_or_default();
    if first != "timestamp" {
        return Err(IoError::Parse {
            path: p,
            line: 1,
            reason: format!("first column must be `timestamp`, got `{first}`"),
        });
    }
    let keys: Vec<String> = fields.map(|s| s.trim().to_string()).collect();
    let mut seen: HashSet<String> = HashSet::new();
    for k in &keys {
        if !seen.insert(k.clone()) {
            return Err(IoError::Parse {
                path: p,
                line: 1,
                reason: format!("duplicate column `{k}`"),
            });
        }
    }
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); keys.len()];
    let mut start: Option<Timestamp> = None;
    let mut expected: Option<Timestamp> = None;
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let mut parts = line.split(',');
        let stamp_txt = parts.next().unwrap_or_default();
        let stamp = Timestamp::parse(stamp_txt).map_err(|e| IoError::Parse {
            path: p.clone(),
            line: lineno,
            reason: e.to_string(),
        })?;
        match expected {
            None => {
                start = Some(stamp);
                expected = Some(stamp.plus_hours(1));
            }
            Some(want) => {
                if stamp < want {
                    return Err(IoError::Parse {
                        path: p.clone(),
                        line: lineno,
                        reason: format!("duplicate or out-of-order hour `{stamp}`"),
                    });
                }
                if stamp > want {
                    return Err(IoError::Parse {
                        path: p.clone(),
                        line: lineno,
                        reason: format!("missing hour `{want}`"),
                    });
                }
                expected = Some(stamp.plus_hours(1));
            }
        }
        let mut count = 0;
        for (k, field) in parts.enumerate() {
            if k >= columns.len() {
                break;
            }
            let v: f64 = field.trim().parse().map_err(|_| IoError::Parse {
                path: p.clone(),
                line: lineno,
                reason: format!("non-numeric value `{}` in column `{}`", field, keys[k]),
            })?;
            columns[k].push(v);
            count += 1;
        }
        if count != keys.len() {
            return Err(IoError::Parse {
                path: p.clone(),
                line: lineno,
                reason: format!("expected {} value(s), found {count}", keys.len()),
            });
        }
    }
    let hours = columns.first().map(|c| c.len()).unwrap_or(0);
    let mut table = SeriesTable::new();
    for (k, col) in keys.into_iter().zip(columns) {
        table.set_column(&k, col);
    }
    Ok((start, hours, table))
}

/// Write `load.csv`, `availability.csv`, and `reserves.csv` into `dir`.
pub fn write_series_dir(series: &TimeSeriesFrame, dir: &Path) -> Result<(), IoError> {
    std::fs::create_dir_all(dir).map_err(|e| IoError::file(dir, e))?;
    for (name, table) in [
        ("load.csv", &series.load),
        ("availability.csv", &series.availability),
        ("reserves.csv", &series.reserve_requirements),
    ] {
        let path = dir.join(name);
        std::fs::write(&path, table_to_csv(series.start, series.hours, table))
            .map_err(|e| IoError::file(&path, e))?;
    }
    Ok(())
}

/// Read the three series families from `dir`. `reserves.csv` and
/// `availability.csv` may be absent when the system declares no such
/// entities; `load.csv` is mandatory.
pub fn read_series_dir(dir: &Path) -> Result<TimeSeriesFrame, IoError> {
    let load_path = dir.join("load.csv");
    let text = std::fs::read_to_string(&load_path).map_err(|e| IoError::file(&load_path, e))?;
    let (start, hours, load) = parse_table(&load_path, &text)?;
    let start = start.ok_or_else(|| IoError::Format {
        path: load_path.display().to_string(),
        reason: "no data rows".into(),
    })?;

    let mut frame = TimeSeriesFrame::new(start, hours);
    frame.load = load;
    for (name, slot) in [
        ("availability.csv", &mut frame.availability),
        ("reserves.csv", &mut frame.reserve_requirements),
    ] {
        let path = dir.join(name);
        if !path.exists() {
            continue;
        }
        let text = std::fs::read_to_string(&path).map_err(|e| IoError::file(&path, e))?;
        let (s, h, table) = parse_table(&path, &text)?;
        if !table.is_empty()
            && (s != Some(start) || h != hours) {
                return Err(IoError::Format {
                    path: path.display().to_string(),
                    reason: format!(
                        "calendar mismatch with load.csv (start {:?} hours {h} vs {start} {hours})",
                        s
                    ),
                });
            }
        *slot = table;
    }
    Ok(frame)
}

/// Columns in any series family that match no declared entity.
pub fn unknown_columns(spec: &SystemSpec, series: &TimeSeriesFrame) -> Vec<String> {
    let mut unknown = Vec::new();
    let zone_ids: HashSet<&str> = spec.zones.iter().map(|z| z.id.as_str()).collect();
    for key in series.load.keys() {
        if !zone_ids.contains(key) {
            unknown.push(format!("load.csv column `{key}`"));
        }
    }
    let avail_keys: HashSet<&str> = spec
        .vre_units
        .iter()
        .map(|v| v.availability_series_key.as_str())
        .collect();
    for key in series.availability.keys() {
        if !avail_keys.contains(key) {
            unknown.push(format!("availability.csv column `{key}`"));
        }
    }
    let req_keys: HashSet<&str> = spec
        .reserve_products
        .iter()
        .map(|r| r.requirement_series_key.as_str())
        .collect();
    for key in series.reserve_requirements.keys() {
        if !req_keys.contains(key) {
            unknown.push(format!("reserves.csv column `{key}`"));
        }
    }
    unknown
}

/// Digest over the canonical CSV forms of all three families.
pub fn series_digest(series: &TimeSeriesFrame) -> String {
    let mut all = String::new();
    for table in [
        &series.load,
        &series.availability,
        &series.reserve_requirements,
    ] {
        all.push_str(&table_to_csv(series.start, series.hours, table));
    }
    sha256_hex(all.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synth_system, SynthParams};

    #[test]
    fn series_roundtrip() {
        let (_, series) = synth_system(&SynthParams::default_with(2, 48), 9).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_series_dir(&series, dir.path()).unwrap();
        let back = read_series_dir(dir.path()).unwrap();
        assert_eq!(series, back);
    }

    #[test]
    fn duplicate_hour_names_the_timestamp() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("load.csv");
        std::fs::write(
            &path,
            "timestamp,z1\n2050-01-01T00:00:00Z,1\n2050-01-01T00:00:00Z,2\n",
        )
        .unwrap();
        let err = read_series_dir(dir.path()).unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("2050-01-01T00:00:00Z") && msg.contains("duplicate"),
            "{msg}"
        );
    }

    #[test]
    fn non_numeric_value_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("load.csv"),
            "timestamp,z1\n2050-01-01T00:00:00Z,abc\n",
        )
        .unwrap();
        let err = read_series_dir(dir.path()).unwrap_err();
        assert!(err.to_string().contains("non-numeric"), "{err}");
    }

    #[test]
    fn missing_hour_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("load.csv"),
            "timestamp,z1\n2050-01-01T00:00:00Z,1\n2050-01-01T02:00:00Z,2\n",
        )
        .unwrap();
        let err = read_series_dir(dir.path()).unwrap_err();
        assert!(err.to_string().contains("missing hour"), "{err}");
    }

    #[test]
    fn unknown_columns_detected() {
        let (spec, mut series) = synth_system(&SynthParams::default_with(1, 24), 1).unwrap();
        series.load.set_column("ghost", vec![1.0; 24]);
        let unknown = unknown_columns(&spec, &series);
        assert_eq!(unknown.len(), 1);
        assert!(unknown[0].contains("ghost"));
    }
}
