//! Multivariate observation sequences and their CSV form.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// `n × d` observations; row `t` is `Z_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    dim: usize,
    pub name: String,
    pub columns: Vec<String>,
}

impl TimeSeries {
    /// Row-major values. Every entry must be finite.
    pub fn new(values: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || values.is_empty() || !values.len().is_multiple_of(dim) {
            return Err(Error::Dimension(format!(
                "{} values cannot form rows of width {dim}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                step: pos / dim,
                what: format!("series entry in column {}", pos % dim),
            });
        }
        let columns = (1..=dim).map(|j| format!("z{j}")).collect();
        Ok(Self {
            values,
            dim,
            name: String::new(),
            columns,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::new(rows.concat(), dim)
    }

    pub fn with_columns(mut self, columns: Vec<String>) -> Result<Self> {
        if columns.len() != self.dim {
            return Err(Error::Dimension(format!(
                "{} column names for {} columns",
                columns.len(),
                self.dim
            )));
        }
        self.columns = columns;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.dim..(t + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Rows `range` as a new series.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.is_empty() || range.end > self.len() {
            return Err(Error::Dimension(format!("row range {range:?} of {} rows", self.len())));
        }
        let mut out = Self::new(
            self.values[range.start * self.dim..range.end * self.dim].to_vec(),
            self.dim,
        )?;
        out.name = self.name.clone();
        out.columns = self.columns.clone();
        Ok(out)
    }

    /// Keep only the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        if cols.is_empty() || cols.iter().any(|&c| c >= self.dim) {
            return Err(Error::Dimension(format!(
                "column selection {cols:?} out of 0..{}",
                self.dim
            )));
        }
        let values = self.rows().flat_map(|r| cols.iter().map(move |&c| r[c])).collect();
        let mut out = Self::new(values, cols.len())?;
        out.name = self.name.clone();
        out.columns = cols.iter().map(|&c| self.columns[c].clone()).collect();
        Ok(out)
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.len(), self.dim, &self.values)
    }

    /// Euclidean norm of every row.
    pub fn row_norms(&self) -> Vec<f64> {
        self.rows()
            .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect()
    }

    /// Headered CSV `t,z1,…,zd`; values use the shortest representation that
    /// parses back to the identical `f64`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.dim).map(|j| format!("z{j}")));
        wtr.write_record(&header)?;
        for (t, row) in self.rows().enumerate() {
            let mut rec = Vec::with_capacity(self.dim + 1);
            rec.push(t.to_string());
            rec.extend(row.iter().map(|v| format!("{v:?}")));
            wtr.write_record(&rec)?;
        }
        wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    /// Read the `t,z1,…,zd` format written by [`TimeSeries::write_csv`].
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let header = rdr.headers()?.clone();
        if header.get(0) != Some("t") || header.len() < 2 {
            return Err(Error::Parse {
                row: 0,
                column: 0,
                message: "expected header t,z1,...,zd".into(),
            });
        }
        let dim = header.len() - 1;
        let mut values = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            for (j, field) in rec.iter().enumerate().skip(1) {
                let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                    row: i + 1,
                    column: j,
                    message: format!("not a number: {field:?}"),
                })?;
                values.push(v);
            }
        }
        if values.is_empty() {
            return Err(Error::Empty("time series CSV has no rows".into()));
        }
        Self::new(values, dim)
    }

    pub fn read_csv_file(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_non_finite() {
        assert!(TimeSeries::new(vec![1.0, f64::NAN], 1).is_err());
        assert!(TimeSeries::new(vec![], 1).is_err());
    }

    #[test]
    fn select_and_slice() {
        let s = TimeSeries::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let c = s.select_columns(&[2, 0]).unwrap();
        assert_eq!(c.values(), &[3.0, 1.0, 6.0, 4.0]);
        assert_eq!(c.columns, vec!["z3", "z1"]);
        assert_eq!(s.slice(1..2).unwrap().values(), &[4.0, 5.0, 6.0]);
        assert_eq!(s.row_norms()[0], 14f64.sqrt());
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_bit_exact(vals in prop::collection::vec(-1e300f64..1e300, 1..60), dim in 1usize..4) {
            let n = vals.len() / dim;
            prop_assume!(n >= 1);
            let s = TimeSeries::new(vals[..n * dim].to_vec(), dim).unwrap();
            let mut buf = Vec::new();
            s.write_csv(&mut buf).unwrap();
            let back = TimeSeries::read_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back.values(), s.values());
        }
    }
}
