//! Reading observed series from headered CSV files.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Transform {
    #[default]
    None,
    /// `Z_t − Z_{t−1}`; drops the first row.
    Diff,
    /// `log Z_t − log Z_{t−1}`; needs positive values, drops the first row.
    Logdiff,
}

impl std::str::FromStr for Transform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Transform::None),
            "diff" => Ok(Transform::Diff),
            "logdiff" => Ok(Transform::Logdiff),
            other => Err(Error::Config(format!(
                "unknown transform {other:?}; use none, diff or logdiff"
            ))),
        }
    }
}

fn is_index_column(name: &str) -> bool {
    matches!(
        name.trim().to_ascii_lowercase().as_str(),
        "t" | "date" | "time" | "index"
    )
}

/// Parse a headered CSV, keep the named columns (every column except a
/// leading `t`/`date` index when `columns` is `None`) and apply `transform`
/// columnwise.
pub fn ingest_reader<R: Read>(reader: R, transform: Transform, columns: Option<&[String]>) -> Result<TimeSeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    let picked: Vec<usize> = match columns {
        Some(names) => names
            .iter()
            .map(|n| {
                header
                    .iter()
                    .position(|h| h == n)
                    .ok_or_else(|| Error::Config(format!("column {n:?} not in header")))
            })
            .collect::<Result<_>>()?,
        None => (0..header.len())
            .filter(|&j| !(j == 0 && is_index_column(&header[0])))
            .collect(),
    };
    if picked.is_empty() {
        return Err(Error::Empty("no data columns selected".into()));
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = picked
            .iter()
            .map(|&j| {
                let field = rec.get(j).unwrap_or("");
                field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        row: i + 1,
                        column: j + 1,
                        message: format!("column {:?}: not a finite number: {field:?}", &header[j]),
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Empty("CSV has no data rows".into()));
    }
    let rows = apply_transform(rows, transform, &picked)?;
    let names = picked.iter().map(|&j| header[j].to_string()).collect();
    TimeSeries::from_rows(&rows)?.with_columns(names)
}

fn apply_transform(rows: Vec<Vec<f64>>, transform: Transform, picked: &[usize]) -> Result<Vec<Vec<f64>>> {
    match transform {
        Transform::None => Ok(rows),
        Transform::Diff | Transform::Logdiff => {
            if rows.len() < 2 {
                return Err(Error::Empty("differencing needs at least two rows".into()));
            }
            let rows = if transform == Transform::Logdiff {
                for (i, row) in rows.iter().enumerate() {
                    if let Some(j) = row.iter().position(|v| *v <= 0.0) {
                        return Err(Error::Parse {
                            row: i + 1,
                            column: picked[j] + 1,
                            message: format!("logdiff needs positive values, got {}", row[j]),
                        });
                    }
                }
                rows.into_iter().map(|r| r.into_iter().map(f64::ln).collect()).collect()
            } else {
                rows
            };
            Ok(rows
                .windows(2)
                .map(|w| w[1].iter().zip(&w[0]).map(|(b, a)| b - a).collect())
                .collect())
        }
    }
}

pub fn ingest_csv(path: &Path, transform: Transform, columns: Option<&[String]>) -> Result<TimeSeries> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut ts = ingest_reader(std::io::BufReader::new(f), transform, columns)?;
    ts.name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(ts)
}
