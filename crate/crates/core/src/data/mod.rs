//! Ingestion of position and forcing CSVs, daily aggregation, the date
//! outer join with gap filling, and the daily series the model trains on.

mod ingest;
mod merge;

pub use ingest::{load_env_csv, load_position_csv, parse_date, PositionLoad};
pub use merge::{daily_aggregate, fill_gaps, merge_on_date, JoinedTable};

use std::fmt;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::geo::GeoPosition;
use crate::physics::EnvSample;
use crate::scaler::{FEATURE_NAMES, N_FEATURES};

/// One calendar day of a single source. Fields follow
/// [`FEATURE_NAMES`] order; `counts[k]` is how many raw values were
/// averaged into `values[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub date: NaiveDate,
    pub values: [Option<f64>; N_FEATURES],
    pub counts: [u32; N_FEATURES],
}

impl RawRecord {
    pub fn new(date: NaiveDate, values: [Option<f64>; N_FEATURES]) -> Self {
        Self {
            date,
            values,
            counts: values.map(|v| u32::from(v.is_some())),
        }
    }
}

/// Where a merged cell came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellFlag {
    /// A single raw value.
    Observed,
    /// Mean of several raw values for the same day.
    Aggregated,
    /// Interpolated or extended across a gap.
    Filled,
}

impl CellFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            CellFlag::Observed => "observed",
            CellFlag::Aggregated => "aggregated",
            CellFlag::Filled => "filled",
        }
    }
}

impl fmt::Display for CellFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Complete daily table: strictly increasing dates, no missing cells, one
/// provenance flag per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct MergedDataset {
    pub dates: Vec<NaiveDate>,
    pub values: Vec<[f64; N_FEATURES]>,
    pub flags: Vec<[CellFlag; N_FEATURES]>,
}

impl MergedDataset {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn filled_count(&self) -> usize {
        self.flags
            .iter()
            .flatten()
            .filter(|f| **f == CellFlag::Filled)
            .count()
    }

    /// Removes rows whose latitude or longitude was filled rather than
    /// observed. Date spacing is no longer uniform afterwards.
    pub fn without_filled_positions(&self) -> Self {
        let keep: Vec<bool> = self
            .flags
            .iter()
            .map(|f| f[0] != CellFlag::Filled && f[1] != CellFlag::Filled)
            .collect();
        let pick = |k: usize| keep[k];
        Self {
            dates: (0..self.len())
                .filter(|k| pick(*k))
                .map(|k| self.dates[k])
                .collect(),
            values: (0..self.len())
                .filter(|k| pick(*k))
                .map(|k| self.values[k])
                .collect(),
            flags: (0..self.len())
                .filter(|k| pick(*k))
                .map(|k| self.flags[k])
                .collect(),
        }
    }

    /// Merged CSV: `date,lat,lon,area,u10,v10,uo,vo`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_rows(&self.dates, self.values.iter().copied(), out)
    }

    /// Provenance sidecar: `date,field,flag`, one line per cell.
    pub fn write_provenance_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        write_record(&mut w, &["date", "field", "flag"])?;
        for (date, flags) in self.dates.iter().zip(&self.flags) {
            let d = date.format("%Y-%m-%d").to_string();
            for (name, flag) in FEATURE_NAMES.iter().zip(flags) {
                write_record(&mut w, &[d.as_str(), name, flag.as_str()])?;
            }
        }
        w.flush().map_err(|e| Error::io("<provenance csv>", e))
    }

    pub fn to_series(&self) -> Result<DriftSeries> {
        DriftSeries::from_rows(self.dates.clone(), &self.values)
    }
}

fn write_rows<W: Write>(
    dates: &[NaiveDate],
    rows: impl Iterator<Item = [f64; N_FEATURES]>,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["date"];
    header.extend(FEATURE_NAMES);
    write_record(&mut w, &header)?;
    for (date, row) in dates.iter().zip(rows) {
        let mut rec = vec![date.format("%Y-%m-%d").to_string()];
        rec.extend(row.iter().map(|v| v.to_string()));
        write_record(&mut w, &rec)?;
    }
    w.flush().map_err(|e| Error::io("<merged csv>", e))
}

fn write_record<W: Write, S: AsRef<[u8]>>(w: &mut csv::Writer<W>, rec: &[S]) -> Result<()> {
    w.write_record(rec)
        .map_err(|e| Error::InvalidInput(e.to_string()))
}

/// Dated trajectory with its forcing; the unit the model trains and
/// forecasts on. Consecutive rows need not be one day apart; windows are only
/// formed over runs of consecutive days.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftSeries {
    dates: Vec<NaiveDate>,
    positions: Vec<GeoPosition>,
    env: Vec<EnvSample>,
}

impl DriftSeries {
    pub fn new(
        dates: Vec<NaiveDate>,
        positions: Vec<GeoPosition>,
        env: Vec<EnvSample>,
    ) -> Result<Self> {
        if dates.len() != positions.len() || dates.len() != env.len() {
            return Err(Error::LengthMismatch(format!(
                "{} dates, {} positions, {} forcing rows",
                dates.len(),
                positions.len(),
                env.len()
            )));
        }
        if dates.windows(2).any(|d| d[1] <= d[0]) {
            return Err(Error::InvalidInput(
                "dates must be strictly increasing".into(),
            ));
        }
        for e in &env {
            e.validate()?;
        }
        Ok(Self {
            dates,
            positions,
            env,
        })
    }

    /// Builds a series from `[lat, lon, area, u10, v10, uo, vo]` rows.
    pub fn from_rows(dates: Vec<NaiveDate>, rows: &[[f64; N_FEATURES]]) -> Result<Self> {
        let mut positions = Vec::with_capacity(rows.len());
        let mut env = Vec::with_capacity(rows.len());
        for r in rows {
            positions.push(GeoPosition::new(r[0], r[1])?);
            env.push(EnvSample::new(r[3], r[4], r[5], r[6], r[2])?);
        }
        Self::new(dates, positions, env)
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn positions(&self) -> &[GeoPosition] {
        &self.positions
    }

    pub fn env(&self) -> &[EnvSample] {
        &self.env
    }

    /// Unscaled feature row `t`.
    pub fn raw_row(&self, t: usize) -> [f64; N_FEATURES] {
        let p = self.positions[t];
        let e = &self.env[t];
        [p.lat(), p.lon(), e.area, e.u10, e.v10, e.uo, e.vo]
    }

    /// Whether rows `from..=to` are consecutive calendar days.
    pub fn is_contiguous(&self, from: usize, to: usize) -> bool {
        (from..to).all(|t| (self.dates[t + 1] - self.dates[t]).num_days() == 1)
    }

    /// Same layout as [`MergedDataset::write_csv`].
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_rows(&self.dates, (0..self.len()).map(|t| self.raw_row(t)), out)
    }

    /// Rows `range` as a new series.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            dates: self.dates[range.clone()].to_vec(),
            positions: self.positions[range.clone()].to_vec(),
            env: self.env[range].to_vec(),
        }
    }
}

/// Reads a merged CSV written by [`MergedDataset::write_csv`].
pub fn load_merged_csv(path: impl AsRef<Path>) -> Result<DriftSeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let headers = rdr
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(|h| h.trim().to_ascii_lowercase())
        .collect::<Vec<_>>();
    let mut expected = vec!["date"];
    expected.extend(FEATURE_NAMES);
    for name in &expected {
        if !headers.iter().any(|h| h == name) {
            return Err(Error::MissingColumn {
                path: path.to_path_buf(),
                column: (*name).to_string(),
            });
        }
    }
    let col = |name: &str| headers.iter().position(|h| h == name).expect("checked");
    let date_col = col("date");
    let feature_cols: Vec<usize> = FEATURE_NAMES.iter().map(|n| col(n)).collect();
    let mut dates = Vec::new();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |c: usize| rec.get(c).unwrap_or("").trim();
        let date = parse_date(field(date_col)).ok_or_else(|| Error::ParseFailure {
            path: path.to_path_buf(),
            line,
            column: "date".into(),
            content: field(date_col).into(),
            message: "expected YYYY-MM-DD".into(),
        })?;
        let mut row = [0.0; N_FEATURES];
        for (k, c) in feature_cols.iter().enumerate() {
            row[k] = field(*c)
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::ParseFailure {
                    path: path.to_path_buf(),
                    line,
                    column: FEATURE_NAMES[k].into(),
                    content: field(*c).into(),
                    message: "expected a finite number".into(),
                })?;
        }
        dates.push(date);
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    DriftSeries::from_rows(dates, &rows)
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::ParseFailure {
            path: path.to_path_buf(),
            line,
            column: String::new(),
            content: String::new(),
            message: format!("{other:?}"),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day(d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2021, 3, d).unwrap()
    }

    #[test]
    fn contiguity() {
        let rows = [[-60.0, -45.0, 3000.0, 1.0, 1.0, 0.1, 0.1]; 4];
        let s = DriftSeries::from_rows(vec![day(1), day(2), day(4), day(5)], &rows).unwrap();
        assert!(s.is_contiguous(0, 1));
        assert!(!s.is_contiguous(0, 2));
        assert!(s.is_contiguous(2, 3));
    }

    #[test]
    fn series_rejects_unsorted_dates() {
        let rows = [[-60.0, -45.0, 3000.0, 1.0, 1.0, 0.1, 0.1]; 2];
        assert!(DriftSeries::from_rows(vec![day(2), day(1)], &rows).is_err());
        assert!(matches!(
            DriftSeries::from_rows(vec![day(1)], &rows),
            Err(Error::LengthMismatch(_))
        ));
    }
}
