//! Regression pairs `(x_i, y_i)` stored contiguously for the SGD hot loop.

use nalgebra::{DMatrix, DVectorView};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// `n` pairs with `x_i ∈ R^{d_in}` and `y_i ∈ R^{d_out}`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionData {
    d_in: usize,
    d_out: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl RegressionData {
    pub fn new(d_in: usize, d_out: usize, xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if d_in == 0 || d_out == 0 {
            return Err(Error::Dimension("regression dimensions must be positive".into()));
        }
        if !xs.len().is_multiple_of(d_in) || !ys.len().is_multiple_of(d_out) || xs.len() / d_in != ys.len() / d_out {
            return Err(Error::Dimension(format!(
                "{} x-values and {} y-values do not split into pairs of ({d_in}, {d_out})",
                xs.len(),
                ys.len()
            )));
        }
        Ok(Self { d_in, d_out, xs, ys })
    }

    /// VAR(p) design over the rows `targets` of `series` (0-based):
    /// `y = Z_t`, `x = (Z_{t-1}, …, Z_{t-p})`. Every target needs `p` rows of history.
    pub fn var_design(series: &TimeSeries, p: usize, targets: std::ops::Range<usize>) -> Result<Self> {
        let d = series.dim();
        if p == 0 {
            return Err(Error::Parameter("VAR order p must be at least 1".into()));
        }
        if targets.start < p || targets.end > series.len() {
            return Err(Error::Dimension(format!(
                "targets {targets:?} need {p} rows of history inside a series of {} rows",
                series.len()
            )));
        }
        let n = targets.len();
        let mut xs = Vec::with_capacity(n * d * p);
        let mut ys = Vec::with_capacity(n * d);
        for t in targets {
            ys.extend_from_slice(series.row(t));
            for lag in 1..=p {
                xs.extend_from_slice(series.row(t - lag));
            }
        }
        Self::new(d * p, d, xs, ys)
    }

    pub fn len(&self) -> usize {
        self.ys.len() / self.d_out
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    #[inline]
    pub fn x(&self, i: usize) -> &[f64] {
        &self.xs[i * self.d_in..(i + 1) * self.d_in]
    }

    #[inline]
    pub fn y(&self, i: usize) -> &[f64] {
        &self.ys[i * self.d_out..(i + 1) * self.d_out]
    }

    pub fn x_view(&self, i: usize) -> DVectorView<'_, f64> {
        DVectorView::from_slice(self.x(i), self.d_in)
    }

    pub fn y_view(&self, i: usize) -> DVectorView<'_, f64> {
        DVectorView::from_slice(self.y(i), self.d_out)
    }

    /// Check that `theta` maps inputs to outputs.
    pub fn check_theta(&self, theta: &DMatrix<f64>) -> Result<()> {
        if theta.nrows() != self.d_out || theta.ncols() != self.d_in {
            return Err(Error::Dimension(format!(
                "theta is {}x{}, data needs {}x{}",
                theta.nrows(),
                theta.ncols(),
                self.d_out,
                self.d_in
            )));
        }
        Ok(())
    }
}

/// Euclidean norm of `y - theta x`, written through `scratch` (length `d_out`).
#[inline]
pub(crate) fn residual_into(theta: &DMatrix<f64>, x: &[f64], y: &[f64], scratch: &mut [f64]) -> f64 {
    let (rows, cols) = theta.shape();
    scratch.copy_from_slice(y);
    // column-major storage: accumulate column by column
    let data = theta.as_slice();
    for (j, &xj) in x.iter().enumerate().take(cols) {
        if xj == 0.0 {
            continue;
        }
        let col = &data[j * rows..(j + 1) * rows];
        for (s, &c) in scratch.iter_mut().zip(col) {
            *s -= c * xj;
        }
    }
    scratch.iter().map(|v| v * v).sum::<f64>().sqrt()
}
