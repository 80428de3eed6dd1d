//! Daily `date,value` files turned into one Fourier-coefficient curve per year.
//!
//! Day `d` of a 365-day year sits at node `(d - ½)/365`; February 29 is
//! dropped so every year shares the same grid.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use eigenbreak_core::funcspace::{project, CoeffSeries, FourierBasis};
use serde::Serialize;

use crate::error::{Error, Result};

pub const DAYS: usize = 365;

/// Fewest valid readings a year needs to be kept.
pub const DEFAULT_MIN_DAYS: usize = 360;

/// Error lines listed before the message is truncated.
const MAX_REPORTED: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DailyRecord {
    /// 1-based line in the file, header included.
    pub line: u64,
    pub date: NaiveDate,
    pub value: Option<f64>,
}

/// 1-based position of `date` on the 365-day grid; `None` for February 29.
pub fn day_index(date: NaiveDate) -> Option<usize> {
    let ordinal = date.ordinal() as usize;
    if !date.leap_year() || date.month() < 2 || ordinal <= 59 {
        return Some(ordinal);
    }
    if date.month() == 2 && date.day() == 29 {
        None
    } else {
        Some(ordinal - 1)
    }
}

pub fn day_node(day: usize) -> f64 {
    (day as f64 - 0.5) / DAYS as f64
}

/// Parses a `date,value` file. Every malformed line is reported.
pub fn read_daily<R: Read>(reader: R) -> Result<Vec<DailyRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() != 2 || &header[0] != "date" || &header[1] != "value" {
        return Err(Error::Input(format!(
            "line 1: expected header `date,value`, found `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut records = Vec::new();
    let mut bad: Vec<String> = Vec::new();
    for row in rdr.records() {
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                bad.push(format!("line {line}: {e}"));
                continue;
            }
        };
        let line = row.position().map_or(0, |p| p.line());
        let date = match NaiveDate::parse_from_str(&row[0], "%Y-%m-%d") {
            Ok(d) => d,
            Err(_) => {
                bad.push(format!("line {line}: unparseable date `{}`", &row[0]));
                continue;
            }
        };
        let value = if row[1].is_empty() {
            None
        } else {
            match row[1].parse::<f64>() {
                Ok(v) if v.is_finite() => Some(v),
                _ => {
                    bad.push(format!("line {line}: invalid value `{}`", &row[1]));
                    continue;
                }
            }
        };
        records.push(DailyRecord { line, date, value });
    }
    if !bad.is_empty() {
        let more = bad.len().saturating_sub(MAX_REPORTED);
        let mut msg = bad.into_iter().take(MAX_REPORTED).collect::<Vec<_>>().join("; ");
        if more > 0 {
            msg.push_str(&format!("; and {more} more"));
        }
        return Err(Error::Input(msg));
    }
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExcludedYear {
    pub year: i32,
    pub valid_days: usize,
}

/// Yearly curves in calendar order.
#[derive(Debug, Clone)]
pub struct YearlyCurves {
    pub years: Vec<i32>,
    pub series: CoeffSeries,
    pub excluded: Vec<ExcludedYear>,
}

/// Groups `records` by year and projects each complete-enough year.
pub fn curves_from_records(records: &[DailyRecord], order: usize, min_days: usize) -> Result<YearlyCurves> {
    if min_days < order {
        return Err(Error::Config(format!(
            "min_days: {min_days} readings cannot determine {order} coefficients"
        )));
    }
    if min_days > DAYS {
        return Err(Error::Config(format!("min_days: at most {DAYS}")));
    }
    let mut by_year: BTreeMap<i32, BTreeMap<usize, (u64, f64)>> = BTreeMap::new();
    let mut seen: BTreeMap<NaiveDate, u64> = BTreeMap::new();
    for rec in records {
        if let Some(first) = seen.insert(rec.date, rec.line) {
            return Err(Error::Input(format!(
                "line {}: duplicate date {} (first on line {first})",
                rec.line, rec.date
            )));
        }
        let year = by_year.entry(rec.date.year()).or_default();
        if let (Some(day), Some(v)) = (day_index(rec.date), rec.value) {
            year.insert(day, (rec.line, v));
        }
    }
    // A year with no valid readings at all still shows up as excluded.
    for rec in records {
        by_year.entry(rec.date.year()).or_default();
    }

    let mut years = Vec::new();
    let mut rows = Vec::new();
    let mut excluded = Vec::new();
    for (year, days) in by_year {
        if days.len() < min_days {
            excluded.push(ExcludedYear { year, valid_days: days.len() });
            continue;
        }
        let nodes: Vec<f64> = days.keys().map(|&d| day_node(d)).collect();
        let values: Vec<f64> = days.values().map(|&(_, v)| v).collect();
        rows.push(project(&values, &nodes, order)?);
        years.push(year);
    }
    if rows.is_empty() {
        return Err(Error::Input(format!("no year has at least {min_days} valid readings")));
    }
    Ok(YearlyCurves {
        years,
        series: CoeffSeries::from_rows(order, &rows)?,
        excluded,
    })
}

pub fn ingest_daily<R: Read>(reader: R, order: usize, min_days: usize) -> Result<YearlyCurves> {
    curves_from_records(&read_daily(reader)?, order, min_days)
}

pub fn ingest_daily_path(path: &Path, order: usize, min_days: usize) -> Result<YearlyCurves> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_daily(std::io::BufReader::new(file), order, min_days).map_err(|e| match e {
        Error::Input(msg) => Error::Input(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Writes one row per calendar day, starting January 1 of `first_year`.
///
/// Row `n` of `series` becomes year `first_year + n`, evaluated on the
/// 365-day grid and shifted by `baseline(node)`. February 29 repeats the
/// February 28 value.
pub fn write_daily<W: Write>(
    series: &CoeffSeries,
    first_year: i32,
    baseline: impl Fn(f64) -> f64,
    writer: W,
) -> Result<()> {
    let basis = FourierBasis::new(series.order(), DAYS)?;
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["date", "value"])?;
    for (n, row) in series.rows().enumerate() {
        let year = first_year + n as i32;
        let curve = basis.synthesize(row)?;
        let mut date = NaiveDate::from_ymd_opt(year, 1, 1)
            .ok_or_else(|| Error::Input(format!("year {year} is out of range")))?;
        while date.year() == year {
            let day = day_index(date).unwrap_or(59);
            let v = curve.values()[day - 1] + baseline(day_node(day));
            w.write_record([date.format("%Y-%m-%d").to_string(), format!("{v}")])?;
            date = date.succ_opt().expect("date in range");
        }
    }
    w.flush().map_err(|e| Error::Input(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    #[test]
    fn leap_years_share_the_grid() {
        assert_eq!(day_index(d(2001, 1, 1)), Some(1));
        assert_eq!(day_index(d(2001, 12, 31)), Some(365));
        assert_eq!(day_index(d(2000, 2, 28)), Some(59));
        assert_eq!(day_index(d(2000, 2, 29)), None);
        assert_eq!(day_index(d(2000, 3, 1)), Some(60));
        assert_eq!(day_index(d(2000, 12, 31)), Some(365));
        assert_eq!(day_index(d(2001, 3, 1)), Some(60));
    }

    #[test]
    fn bad_lines_are_all_reported() {
        let text = "date,value\n2001-01-01,1.0\n2001-13-01,2.0\n2001-01-03,abc\n2001-01-04,\n";
        let err = read_daily(text.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        assert!(err.contains("line 4"), "{err}");
        assert!(!err.contains("line 5"), "{err}");
    }

    #[test]
    fn header_is_checked() {
        assert!(read_daily("day,temp\n2001-01-01,1\n".as_bytes()).is_err());
    }

    #[test]
    fn missing_values_are_none() {
        let recs = read_daily("date,value\n2001-01-01,\n2001-01-02, 3.5 \n".as_bytes()).unwrap();
        assert_eq!(recs[0].value, None);
        assert_eq!(recs[1].value, Some(3.5));
        assert_eq!(recs[1].line, 3);
    }

    #[test]
    fn duplicates_are_rejected() {
        let recs = read_daily("date,value\n2001-01-01,1\n2001-01-01,2\n".as_bytes()).unwrap();
        let err = curves_from_records(&recs, 3, 3).unwrap_err().to_string();
        assert!(err.contains("line 3") && err.contains("line 2"), "{err}");
    }
}
