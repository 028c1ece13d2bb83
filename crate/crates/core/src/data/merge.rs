use std::collections::BTreeMap;

use chrono::NaiveDate;

use super::{CellFlag, MergedDataset, RawRecord};
use crate::error::{Error, Result};
use crate::scaler::{self, FEATURE_NAMES, N_FEATURES};

/// Groups records by day and averages each present field. Output is sorted
/// by date. A day with a single record passes through untouched, which makes
/// the operation idempotent.
pub fn daily_aggregate(records: &[RawRecord]) -> Vec<RawRecord> {
    let mut groups: BTreeMap<NaiveDate, Vec<&RawRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.date).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(date, group)| {
            if let [single] = group[..] {
                return single.clone();
            }
            let mut sum = [0.0; N_FEATURES];
            let mut counts = [0u32; N_FEATURES];
            for r in &group {
                for k in 0..N_FEATURES {
                    if let Some(v) = r.values[k] {
                        let c = r.counts[k].max(1);
                        sum[k] += v * f64::from(c);
                        counts[k] += c;
                    }
                }
            }
            let values =
                std::array::from_fn(|k| (counts[k] > 0).then(|| sum[k] / f64::from(counts[k])));
            RawRecord {
                date,
                values,
                counts,
            }
        })
        .collect()
}

/// Outer-joined daily table before gap filling: one row per calendar day of
/// the position record, cells possibly missing.
#[derive(Debug, Clone, PartialEq)]
pub struct JoinedTable {
    pub dates: Vec<NaiveDate>,
    pub values: Vec<[Option<f64>; N_FEATURES]>,
    pub counts: Vec<[u32; N_FEATURES]>,
}

/// Joins the position record with any number of forcing sources on date,
/// restricted to the days between the first and last position fix, then
/// fills gaps.
///
/// When several sources carry the same field on the same day the values are
/// averaged and the cell is flagged [`CellFlag::Aggregated`].
pub fn merge_on_date(position: &[RawRecord], env: &[Vec<RawRecord>]) -> Result<MergedDataset> {
    let position: Vec<RawRecord> = daily_aggregate(position)
        .into_iter()
        .filter(|r| r.values[scaler::LAT].is_some() && r.values[scaler::LON].is_some())
        .collect();
    let (Some(first), Some(last)) = (position.first(), position.last()) else {
        return Err(Error::EmptyJoin("no position observations".into()));
    };
    let (start, end) = (first.date, last.date);
    let env: Vec<Vec<RawRecord>> = env.iter().map(|s| daily_aggregate(s)).collect();
    let overlaps = env
        .iter()
        .flatten()
        .any(|r| r.date >= start && r.date <= end);
    if !env.iter().all(Vec::is_empty) && !overlaps {
        return Err(Error::EmptyJoin(format!(
            "no forcing record falls within the position dates {start}..{end}"
        )));
    }

    let days = (end - start).num_days() as usize + 1;
    let mut sum = vec![[0.0; N_FEATURES]; days];
    let mut counts = vec![[0u32; N_FEATURES]; days];
    let mut sources = vec![[0u32; N_FEATURES]; days];
    for r in position.iter().chain(env.iter().flatten()) {
        if r.date < start || r.date > end {
            continue;
        }
        let t = (r.date - start).num_days() as usize;
        for k in 0..N_FEATURES {
            if let Some(v) = r.values[k] {
                sum[t][k] += v;
                counts[t][k] += r.counts[k].max(1);
                sources[t][k] += 1;
            }
        }
    }
    let values = (0..days)
        .map(|t| {
            std::array::from_fn(|k| {
                (sources[t][k] > 0).then(|| sum[t][k] / f64::from(sources[t][k]))
            })
        })
        .collect();
    let table = JoinedTable {
        dates: (0..days)
            .map(|t| start + chrono::Days::new(t as u64))
            .collect(),
        values,
        counts,
    };
    fill_gaps(table)
}

/// Linear interpolation across interior gaps and nearest-value extension at
/// the edges. Longitude interpolates along the shorter arc. Observed cells
/// are copied unchanged.
pub fn fill_gaps(table: JoinedTable) -> Result<MergedDataset> {
    let n = table.dates.len();
    if n == 0 {
        return Err(Error::EmptyJoin("joined table has no rows".into()));
    }
    let mut values = vec![[0.0; N_FEATURES]; n];
    let mut flags = vec![[CellFlag::Filled; N_FEATURES]; n];
    for k in 0..N_FEATURES {
        let known: Vec<usize> = (0..n).filter(|t| table.values[*t][k].is_some()).collect();
        if known.is_empty() {
            return Err(Error::UnfillableGap {
                field: FEATURE_NAMES[k],
            });
        }
        let at = |t: usize| table.values[t][k].expect("known index");
        for &t in &known {
            values[t][k] = at(t);
            flags[t][k] = if table.counts[t][k] > 1 {
                CellFlag::Aggregated
            } else {
                CellFlag::Observed
            };
        }
        let (head, tail) = (known[0], known[known.len() - 1]);
        for row in values.iter_mut().take(head) {
            row[k] = at(head);
        }
        for row in values.iter_mut().skip(tail + 1) {
            row[k] = at(tail);
        }
        for pair in known.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let (va, vb) = (at(a), at(b));
            let mut delta = vb - va;
            if k == scaler::LON {
                if delta > 180.0 {
                    delta -= 360.0;
                } else if delta < -180.0 {
                    delta += 360.0;
                }
            }
            for (t, row) in values.iter_mut().enumerate().take(b).skip(a + 1) {
                let mut v = va + delta * ((t - a) as f64 / (b - a) as f64);
                if k == scaler::LON && !(-180.0..180.0).contains(&v) {
                    v = crate::geo::wrap_longitude(v);
                }
                row[k] = v;
            }
        }
    }
    Ok(MergedDataset {
        dates: table.dates,
        values,
        flags,
    })
}
