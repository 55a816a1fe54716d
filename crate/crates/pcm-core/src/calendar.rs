//! Hour-resolution UTC timestamps for simulation calendars.
//!
//! Series files use ISO-8601 stamps (`2050-01-01T00:00:00Z`); internally a
//! timestamp is a count of hours since the civil epoch 1970-01-01T00:00Z.

use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TimestampError {
    #[error("malformed timestamp `{0}`: expected YYYY-MM-DDTHH:00:00Z")]
    Malformed(String),
    #[error("timestamp `{0}` is not aligned to a whole hour")]
    NotHourAligned(String),
    #[error("invalid calendar date `{0}`")]
    InvalidDate(String),
}

/// Hours since 1970-01-01T00:00:00Z. Supports dates before 1970.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(pub i64);

impl Timestamp {
    pub fn from_ymdh(year: i64, month: u32, day: u32, hour: u32) -> Result<Self, TimestampError> {
        if !(1..=12).contains(&month) || day < 1 || day > days_in_month(year, month) || hour > 23 {
            return Err(TimestampError::InvalidDate(format!(
                "{year:04}-{month:02}-{day:02}T{hour:02}"
            )));
        }
        Ok(Timestamp(
            days_from_civil(year, month, day) * 24 + hour as i64,
        ))
    }

    pub fn plus_hours(self, h: i64) -> Self {
        Timestamp(self.0 + h)
    }

    pub fn parse(s: &str) -> Result<Self, TimestampError> {
        let t = s.trim();
        // Accept YYYY-MM-DDTHH:00:00Z and the shorter YYYY-MM-DDTHH:00Z.
        let bad = || TimestampError::Malformed(t.to_string());
        let bytes = t.as_bytes();
        if bytes.len() < 17 || bytes[bytes.len() - 1] != b'Z' {
            return Err(bad());
        }
        let body = &t[..t.len() - 1];
        let (date, time) = body.split_once('T').ok_or_else(bad)?;
        let mut dit = date.split('-');
        let year: i64 = dit.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let month: u32 = dit.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let day: u32 = dit.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        if dit.next().is_some() {
            return Err(bad());
        }
        let parts: Vec<&str> = time.split(':').collect();
        if parts.len() != 2 && parts.len() != 3 {
            return Err(bad());
        }
        let hour: u32 = parts[0].parse().map_err(|_| bad())?;
        for sub in &parts[1..] {
            let v: u32 = sub.parse().map_err(|_| bad())?;
            if v != 0 {
                return Err(TimestampError::NotHourAligned(t.to_string()));
            }
        }
        Self::from_ymdh(year, month, day, hour)
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let days = self.0.div_euclid(24);
        let hour = self.0.rem_euclid(24);
        let (y, m, d) = civil_from_days(days);
        write!(f, "{y:04}-{m:02}-{d:02}T{hour:02}:00:00Z")
    }
}

fn is_leap(year: i64) -> bool {
    year % 4 == 0 && (year % 100 != 0 || year % 400 == 0)
}

fn days_in_month(year: i64, month: u32) -> u32 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if is_leap(year) => 29,
        2 => 28,
        _ => 0,
    }
}

// Civil-date conversions via the standard era/day-of-era decomposition.
fn days_from_civil(y: i64, m: u32, d: u32) -> i64 {
    let y = y - if m <= 2 { 1 } else { 0 };
    let era = if y >= 0 { y } else { y - 399 } / 400;
    let yoe = y - era * 400;
    let mp = ((m as i64) + 9) % 12;
    let doy = (153 * mp + 2) / 5 + d as i64 - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146097 + doe - 719468
}

fn civil_from_days(z: i64) -> (i64, u32, u32) {
    let z = z + 719468;
    let era = if z >= 0 { z } else { z - 146096 } / 146097;
    let doe = z - era * 146097;
    let yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    let y = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = (doy - (153 * mp + 2) / 5 + 1) as u32;
    let m = if mp < 10 { mp + 3 } else { mp - 9 } as u32;
    (y + if m <= 2 { 1 } else { 0 }, m, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epoch_roundtrip() {
        let t = Timestamp::parse("1970-01-01T00:00:00Z").unwrap();
        assert_eq!(t.0, 0);
        assert_eq!(t.to_string(), "1970-01-01T00:00:00Z");
    }

    #[test]
    fn leap_year_february() {
        let t = Timestamp::parse("2048-02-29T23:00:00Z").unwrap();
        assert_eq!(t.plus_hours(1).to_string(), "2048-03-01T00:00:00Z");
        assert!(Timestamp::parse("2050-02-29T00:00:00Z").is_err());
    }

    #[test]
    fn year_of_hours() {
        let start = Timestamp::parse("2050-01-01T00:00:00Z").unwrap();
        assert_eq!(start.plus_hours(8760).to_string(), "2051-01-01T00:00:00Z");
    }

    #[test]
    fn rejects_sub_hour() {
        assert_eq!(
            Timestamp::parse("2050-01-01T00:30:00Z"),
            Err(TimestampError::NotHourAligned(
                "2050-01-01T00:30:00Z".to_string()
            ))
        );
    }

    #[test]
    fn roundtrip_many_days() {
        for h in (-400_000..400_000).step_by(7919) {
            let t = Timestamp(h);
            assert_eq!(Timestamp::parse(&t.to_string()).unwrap(), t);
        }
    }
}
