use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime};

use super::{csv_error, RawRecord};
use crate::error::{Error, Result};
use crate::physics::{MAX_CURRENT, MAX_WIND};
use crate::scaler::{self, FEATURE_NAMES, N_FEATURES};

const DATE_ALIASES: &[&str] = &["date", "datetime", "time", "timestamp", "day"];

/// Accepted header spellings per feature, matched case-insensitively.
const FEATURE_ALIASES: [&[&str]; N_FEATURES] = [
    &["lat", "latitude"],
    &["lon", "long", "longitude"],
    &["area", "area_km2", "size"],
    &["u10", "u10m", "wind_u", "u_wind"],
    &["v10", "v10m", "wind_v", "v_wind"],
    &["uo", "u_current", "current_u"],
    &["vo", "v_current", "current_v"],
];

/// Parses `YYYY-MM-DD` or an ISO-8601 date-time, keeping only the calendar
/// day.
pub fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Some(d);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.date_naive());
    }
    const FORMATS: &[&str] = &[
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ];
    FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .map(|dt| dt.date())
}

fn check_bounds(feature: usize, v: f64) -> std::result::Result<(), String> {
    let ok = match feature {
        scaler::LAT => v.abs() <= 90.0,
        scaler::LON => v.abs() <= 360.0,
        scaler::AREA => v > 0.0,
        scaler::U10 | scaler::V10 => v.abs() < MAX_WIND,
        _ => v.abs() < MAX_CURRENT,
    };
    if ok {
        return Ok(());
    }
    Err(match feature {
        scaler::LAT => "latitude must lie in [-90, 90]".into(),
        scaler::LON => "longitude must lie in [-360, 360]".into(),
        scaler::AREA => "area must be positive (km²)".into(),
        scaler::U10 | scaler::V10 => {
            format!("wind component must lie in (-{MAX_WIND}, {MAX_WIND}) m/s")
        }
        _ => format!("current component must lie in (-{MAX_CURRENT}, {MAX_CURRENT}) m/s"),
    })
}

struct Table {
    date_col: usize,
    feature_cols: [Option<usize>; N_FEATURES],
}

fn resolve_headers(path: &Path, headers: &csv::StringRecord) -> Result<Table> {
    let lower: Vec<String> = headers
        .iter()
        .map(|h| h.trim().to_ascii_lowercase())
        .collect();
    let find = |aliases: &[&str]| lower.iter().position(|h| aliases.contains(&h.as_str()));
    let date_col = find(DATE_ALIASES).ok_or_else(|| Error::MissingColumn {
        path: path.to_path_buf(),
        column: "date".into(),
    })?;
    Ok(Table {
        date_col,
        feature_cols: FEATURE_ALIASES.map(find),
    })
}

/// Reads every row of `path` into a record holding the features in `wanted`.
fn read_rows(path: &Path, wanted: &[usize], required: &[usize]) -> Result<Vec<RawRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(file);
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let table = resolve_headers(path, &headers)?;
    for &k in required {
        if table.feature_cols[k].is_none() {
            return Err(Error::MissingColumn {
                path: path.to_path_buf(),
                column: FEATURE_NAMES[k].into(),
            });
        }
    }
    if wanted.iter().all(|k| table.feature_cols[*k].is_none()) {
        return Err(Error::MissingColumn {
            path: path.to_path_buf(),
            column: wanted
                .iter()
                .map(|k| FEATURE_NAMES[*k])
                .collect::<Vec<_>>()
                .join("|"),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let fail = |column: &str, content: &str, message: String| Error::ParseFailure {
            path: path.to_path_buf(),
            line,
            column: column.into(),
            content: content.into(),
            message,
        };
        let raw_date = rec.get(table.date_col).unwrap_or("").trim();
        let date = parse_date(raw_date)
            .ok_or_else(|| fail("date", raw_date, "expected YYYY-MM-DD or ISO-8601".into()))?;
        let mut values = [None; N_FEATURES];
        for &k in wanted {
            let Some(c) = table.feature_cols[k] else {
                continue;
            };
            let cell = rec.get(c).unwrap_or("").trim();
            if cell.is_empty() {
                if required.contains(&k) {
                    return Err(fail(
                        FEATURE_NAMES[k],
                        cell,
                        "required value is empty".into(),
                    ));
                }
                continue;
            }
            let v: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| fail(FEATURE_NAMES[k], cell, "expected a finite number".into()))?;
            check_bounds(k, v).map_err(|m| fail(FEATURE_NAMES[k], cell, m))?;
            values[k] = Some(if k == scaler::LON {
                crate::geo::wrap_longitude(v)
            } else {
                v
            });
        }
        out.push(RawRecord::new(date, values));
    }
    Ok(out)
}

/// Position file contents after duplicate-date collapsing.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionLoad {
    /// One record per date, ascending.
    pub records: Vec<RawRecord>,
    /// Rows discarded because a later row had the same date.
    pub duplicate_dates: usize,
}

/// Loads an iceberg position CSV (`date`, `lat`, `lon`, optional `area`).
/// Rows sharing a date collapse to the last one.
pub fn load_position_csv(path: impl AsRef<Path>) -> Result<PositionLoad> {
    let path = path.as_ref();
    let rows = read_rows(
        path,
        &[scaler::LAT, scaler::LON, scaler::AREA],
        &[scaler::LAT, scaler::LON],
    )?;
    let total = rows.len();
    let by_date: BTreeMap<NaiveDate, RawRecord> = rows.into_iter().map(|r| (r.date, r)).collect();
    Ok(PositionLoad {
        duplicate_dates: total - by_date.len(),
        records: by_date.into_values().collect(),
    })
}

/// Loads a forcing CSV carrying any of `area`, `u10`, `v10`, `uo`, `vo`.
/// Every row is kept; same-day rows are averaged later by
/// [`daily_aggregate`](super::daily_aggregate).
pub fn load_env_csv(path: impl AsRef<Path>) -> Result<Vec<RawRecord>> {
    read_rows(
        path.as_ref(),
        &[
            scaler::AREA,
            scaler::U10,
            scaler::V10,
            scaler::UO,
            scaler::VO,
        ],
        &[],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn dates_are_truncated_to_the_day() {
        let d = NaiveDate::from_ymd_opt(2020, 2, 29).unwrap();
        for s in [
            "2020-02-29",
            "2020-02-29T23:59:59",
            "2020-02-29 06:00",
            "2020-02-29T12:00:00Z",
            "2020-02-29T12:00:00.5+03:00",
        ] {
            assert_eq!(parse_date(s), Some(d), "{s}");
        }
        assert_eq!(parse_date("29/02/2020"), None);
    }

    #[test]
    fn positions_with_aliases() {
        let f = write("Date,Latitude,Longitude,Area\n2021-01-01,-60,-45,3000\n2021-01-02,-60.1,-45.2,2990\n2021-01-03,-60.2,315,2980\n");
        let load = load_position_csv(f.path()).unwrap();
        assert_eq!(load.records.len(), 3);
        assert_eq!(load.duplicate_dates, 0);
        assert_eq!(load.records[2].values[1], Some(-45.0));
        assert_eq!(load.records[0].values[2], Some(3000.0));
    }

    #[test]
    fn out_of_range_latitude_is_rejected() {
        let f = write("date,lat,lon\n2021-01-01,95,10\n");
        match load_position_csv(f.path()) {
            Err(Error::ParseFailure {
                line,
                column,
                message,
                ..
            }) => {
                assert_eq!(line, 2);
                assert_eq!(column, "lat");
                assert!(message.contains("[-90, 90]"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_dates_keep_the_last_row() {
        let f = write("date,lat,lon\n2021-01-01,-60,10\n2021-01-01,-61,11\n");
        let load = load_position_csv(f.path()).unwrap();
        assert_eq!(load.records.len(), 1);
        assert_eq!(load.duplicate_dates, 1);
        assert_eq!(load.records[0].values[0], Some(-61.0));
    }

    #[test]
    fn missing_columns_are_named() {
        let f = write("date,lat\n2021-01-01,-60\n");
        match load_position_csv(f.path()) {
            Err(Error::MissingColumn { column, .. }) => assert_eq!(column, "lon"),
            other => panic!("{other:?}"),
        }
        let f = write("when,u10\n2021-01-01,3\n");
        assert!(matches!(
            load_env_csv(f.path()),
            Err(Error::MissingColumn { .. })
        ));
    }

    #[test]
    fn env_rows_keep_duplicates_and_blanks() {
        let f = write("DATE,U10,V10\n2021-01-01,2,\n2021-01-01,4,1\n");
        let rows = load_env_csv(f.path()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].values[scaler::V10], None);
        assert_eq!(rows[1].values[scaler::U10], Some(4.0));
    }

    #[test]
    fn bad_numbers_report_line_and_content() {
        let f = write("date,uo\n2021-01-01,0.1\n2021-01-02,abc\n");
        match load_env_csv(f.path()) {
            Err(Error::ParseFailure { line, content, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(content, "abc");
            }
            other => panic!("{other:?}"),
        }
    }
}
