//! Risk and forecast metrics, box-plot summaries and Hill tail-index estimates.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::{residual_into, RegressionData};
use crate::error::{Error, Result};
use crate::series::TimeSeries;
use crate::var_model::{forecast, VarCoefficients};

/// Floor applied by [`log10_error`].
pub const LOG10_FLOOR: f64 = -12.0;

/// `(1/N) Σ |y_i − θ x_i|` with Euclidean residual norms.
pub fn empirical_l1_risk(theta: &DMatrix<f64>, data: &RegressionData) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Empty("empirical risk over zero pairs".into()));
    }
    data.check_theta(theta)?;
    let mut scratch = vec![0.0; data.d_out()];
    let total: f64 = (0..data.len())
        .map(|i| residual_into(theta, data.x(i), data.y(i), &mut scratch))
        .sum();
    Ok(total / data.len() as f64)
}

/// Mean Euclidean error of an `L`-step recursive forecast against `truth`
/// (one row per horizon).
pub fn prediction_error(theta_hat: &VarCoefficients, history: &TimeSeries, truth: &DMatrix<f64>) -> Result<f64> {
    let horizon = truth.nrows();
    if horizon == 0 {
        return Err(Error::Parameter("prediction horizon must be at least 1".into()));
    }
    if truth.ncols() != theta_hat.dim() {
        return Err(Error::Dimension(format!(
            "truth has {} columns, model dimension is {}",
            truth.ncols(),
            theta_hat.dim()
        )));
    }
    let predicted = forecast(theta_hat, history, horizon)?;
    let total: f64 = (0..horizon).map(|i| (truth.row(i) - predicted.row(i)).norm()).sum();
    Ok(total / horizon as f64)
}

pub fn log10_error(e: f64) -> f64 {
    if e < 1e-12 {
        LOG10_FLOOR
    } else {
        e.log10()
    }
}

/// Box-plot statistics; quartiles use linear interpolation between order
/// statistics (R's type 7).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSummary {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

/// Type-7 quantile of an ascending slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn aggregate(values: &[f64]) -> Result<BoxSummary> {
    if values.is_empty() {
        return Err(Error::Empty("nothing to aggregate".into()));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::NonFinite {
            step: 0,
            what: "aggregate input".into(),
        });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&sorted, 0.25);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside = || sorted.iter().copied().filter(|v| (lo_fence..=hi_fence).contains(v));
    Ok(BoxSummary {
        n: values.len(),
        mean: values.iter().sum::<f64>() / values.len() as f64,
        median: quantile_sorted(&sorted, 0.5),
        q1,
        q3,
        whisker_low: inside().next().unwrap_or(q1),
        whisker_high: inside().next_back().unwrap_or(q3),
        outliers: sorted
            .iter()
            .copied()
            .filter(|v| !(lo_fence..=hi_fence).contains(v))
            .collect(),
    })
}

fn sorted_positive(samples: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = samples.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::Parameter(format!(
            "Hill samples must be positive and finite, got {bad}"
        )));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k < 2 || k >= n {
        return Err(Error::Parameter(format!(
            "Hill k must satisfy 2 <= k < n = {n}, got {k}"
        )));
    }
    Ok(())
}

/// Hill estimates `γ(2), …, γ(k_max)` of an ascending sample, computed with
/// running sums of the top log order statistics.
fn hill_sequence(sorted: &[f64], k_max: usize) -> Vec<f64> {
    let n = sorted.len();
    let mut out = Vec::with_capacity(k_max.saturating_sub(1));
    let mut top_logs = sorted[n - 1].ln();
    for k in 2..=k_max {
        top_logs += sorted[n - k].ln();
        let threshold = sorted[n - k - 1].ln();
        // Σ_{i≤k} log X_(n−i+1) − k log X_(n−k), accumulated as differences
        out.push((top_logs - k as f64 * threshold) / k as f64);
    }
    out
}

/// `γ(k) = (1/k) Σ_{i=1..k} log(X_(n−i+1) / X_(n−k))`.
pub fn hill_estimator(samples: &[f64], k: usize) -> Result<f64> {
    check_k(k, samples.len())?;
    let s = sorted_positive(samples)?;
    let n = s.len();
    let base = s[n - k - 1];
    Ok(s[n - k..].iter().map(|x| (x / base).ln()).sum::<f64>() / k as f64)
}

/// Uniform average of `γ(2), …, γ(k̄)`.
pub fn hill_weighted(samples: &[f64], k_bar: usize) -> Result<f64> {
    Ok(hill_curve(samples, k_bar)?.last().map(|r| r.gamma_star).unwrap_or(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HillRow {
    pub k: usize,
    pub gamma: f64,
    pub gamma_star: f64,
    pub inv_gamma_star: f64,
}

/// `γ(k)`, `γ*(k)` and `1/γ*(k)` for `k = 2..=k_max`.
pub fn hill_curve(samples: &[f64], k_max: usize) -> Result<Vec<HillRow>> {
    check_k(k_max, samples.len())?;
    let s = sorted_positive(samples)?;
    let n = s.len();
    let mut rows = Vec::with_capacity(k_max - 1);
    let mut acc = 0.0;
    for k in 2..=k_max {
        let base = s[n - k - 1];
        let gamma = s[n - k..].iter().map(|x| (x / base).ln()).sum::<f64>() / k as f64;
        acc += gamma;
        let gamma_star = acc / (k - 1) as f64;
        rows.push(HillRow {
            k,
            gamma,
            gamma_star,
            inv_gamma_star: 1.0 / gamma_star,
        });
    }
    Ok(rows)
}

/// Fast variant of [`hill_curve`] for long curves; agrees to rounding.
pub fn hill_curve_fast(samples: &[f64], k_max: usize) -> Result<Vec<HillRow>> {
    check_k(k_max, samples.len())?;
    let s = sorted_positive(samples)?;
    let mut acc = 0.0;
    Ok(hill_sequence(&s, k_max)
        .into_iter()
        .enumerate()
        .map(|(i, gamma)| {
            acc += gamma;
            let gamma_star = acc / (i + 1) as f64;
            HillRow {
                k: i + 2,
                gamma,
                gamma_star,
                inv_gamma_star: 1.0 / gamma_star,
            }
        })
        .collect())
}

/// Relative change `(e_a − e_b) / e_a`.
pub fn delta_comparison(e_a: f64, e_b: f64) -> Result<f64> {
    if e_a == 0.0 || !e_a.is_finite() {
        return Err(Error::Parameter(format!(
            "reference error must be nonzero and finite, got {e_a}"
        )));
    }
    Ok((e_a - e_b) / e_a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use crate::tail_dist::NoiseSpec;
    use proptest::prelude::*;

    #[test]
    fn risk_examples() {
        let data = RegressionData::new(1, 1, vec![1.0], vec![3.0]).unwrap();
        assert_eq!(
            empirical_l1_risk(&DMatrix::from_element(1, 1, 1.0), &data).unwrap(),
            2.0
        );
        let data = RegressionData::new(1, 2, vec![1.0, 2.0], vec![3.0, 4.0, 0.0, -1.0]).unwrap();
        assert!((empirical_l1_risk(&DMatrix::zeros(2, 1), &data).unwrap() - 3.0).abs() < 1e-15);
        let empty = RegressionData::new(1, 1, vec![], vec![]).unwrap();
        assert!(empirical_l1_risk(&DMatrix::zeros(1, 1), &empty).is_err());
    }

    #[test]
    fn prediction_error_examples() {
        let theta = VarCoefficients::new(vec![DMatrix::from_element(1, 1, 0.5)]).unwrap();
        let hist = TimeSeries::new(vec![2.0], 1).unwrap();
        let truth = DMatrix::from_column_slice(2, 1, &[1.2, 0.4]);
        assert!((prediction_error(&theta, &hist, &truth).unwrap() - 0.15).abs() < 1e-12);

        let zero = VarCoefficients::new(vec![DMatrix::zeros(3, 3)]).unwrap();
        let hist = TimeSeries::new(vec![0.0; 3], 3).unwrap();
        let truth = DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]);
        assert_eq!(prediction_error(&zero, &hist, &truth).unwrap(), 1.0);
        assert!(prediction_error(&zero, &hist, &DMatrix::zeros(1, 2)).is_err());
    }

    #[test]
    fn noiseless_truth_forecasts_exactly() {
        let coeffs = crate::var_model::VarPreset::Var2Sim.coefficients();
        let mut rng = RngStream::new(3, 0);
        let mut rows = vec![1.0, -2.0, 0.5, 3.0, 1.5, 0.2, 0.1, -0.3, 2.0, 1.0];
        for t in 2..30 {
            let z = &coeffs.lags()[0] * nalgebra::DVector::from_row_slice(&rows[(t - 1) * 5..t * 5])
                + &coeffs.lags()[1] * nalgebra::DVector::from_row_slice(&rows[(t - 2) * 5..(t - 1) * 5]);
            rows.extend(z.iter());
        }
        let series = TimeSeries::new(rows, 5).unwrap();
        let hist = series.slice(0..20).unwrap();
        let truth = series.slice(20..30).unwrap().to_matrix();
        assert_eq!(prediction_error(&coeffs, &hist, &truth).unwrap(), 0.0);
        // the same model simulated with degenerate noise is identically zero
        let path = crate::var_model::simulate(&coeffs, &NoiseSpec::degenerate(), 12, 10, &mut rng).unwrap();
        let truth = path.slice(2..12).unwrap().to_matrix();
        assert_eq!(
            prediction_error(&coeffs, &path.slice(0..2).unwrap(), &truth).unwrap(),
            0.0
        );
    }

    #[test]
    fn log_examples() {
        assert_eq!(log10_error(1.0), 0.0);
        assert_eq!(log10_error(100.0), 2.0);
        assert_eq!(log10_error(0.0), -12.0);
    }

    #[test]
    fn aggregate_examples() {
        let s = aggregate(&[4.0; 7]).unwrap();
        assert_eq!((s.mean, s.median, s.q3 - s.q1), (4.0, 4.0, 0.0));
        assert!(s.outliers.is_empty());
        let s = aggregate(&[5.0, 1.0, 3.0, 2.0, 4.0]).unwrap();
        assert_eq!((s.median, s.q1, s.q3), (3.0, 2.0, 4.0));
        let s = aggregate(&[1.0, 2.0, 3.0, 4.0, 100.0]).unwrap();
        assert_eq!(s.outliers, vec![100.0]);
        assert_eq!(s.whisker_high, 4.0);
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn hill_examples() {
        assert!((hill_estimator(&[2.0, 4.0, 8.0, 16.0], 2).unwrap() - 1.039720770839918).abs() < 1e-12);
        assert_eq!(hill_estimator(&[3.0; 10], 4).unwrap(), 0.0);
        assert_eq!(hill_weighted(&[3.0; 10], 6).unwrap(), 0.0);
        assert!(hill_estimator(&[1.0, 2.0, 3.0], 3).is_err());
        assert!(hill_estimator(&[1.0, 2.0, 3.0], 1).is_err());
        assert!(hill_estimator(&[1.0, -2.0, 3.0, 4.0], 2).is_err());
    }

    #[test]
    fn hill_on_exact_geometric_sample_is_constant() {
        // X_(j) = 2^j gives γ(k) = log 2 · (k+1)/2, so test the average separately
        let s: Vec<f64> = (0..50).map(|j| 2f64.powi(j)).collect();
        for row in hill_curve(&s, 20).unwrap() {
            let expect = 2f64.ln() * (row.k + 1) as f64 / 2.0;
            assert!((row.gamma - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn hill_consistency_pareto() {
        let law = NoiseSpec::pareto(1.5);
        let mut rng = RngStream::new(11, 0);
        let xs: Vec<f64> = (0..100_000).map(|_| law.sample(&mut rng).unwrap()).collect();
        let g = hill_estimator(&xs, 1000).unwrap();
        assert!((1.0 / g - 1.5).abs() < 0.15, "{}", 1.0 / g);
    }

    #[test]
    fn hill_plateau_quarter() {
        // exact Pareto(4) quantiles: γ(k) hovers around 1/4
        let n = 200;
        let xs: Vec<f64> = (1..=n).map(|i| (1.0 - i as f64 / (n + 1) as f64).powf(-0.25)).collect();
        let inv = 1.0 / hill_weighted(&xs, 160).unwrap();
        assert!((inv - 4.0).abs() < 0.3, "{inv}");
    }

    #[test]
    fn delta_examples() {
        assert_eq!(delta_comparison(2.0, 2.0).unwrap(), 0.0);
        assert_eq!(delta_comparison(2.0, 1.0).unwrap(), 0.5);
        assert_eq!(delta_comparison(1.0, 2.0).unwrap(), -1.0);
        assert!(delta_comparison(0.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn hill_scale_invariant(xs in prop::collection::vec(0.01f64..100.0, 10..60), c in 1e-3f64..1e3, k in 2usize..9) {
            let scaled: Vec<f64> = xs.iter().map(|x| x * c).collect();
            let a = hill_estimator(&xs, k).unwrap();
            let b = hill_estimator(&scaled, k).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn fast_curve_agrees(xs in prop::collection::vec(0.01f64..100.0, 10..60)) {
            let k = xs.len() - 1;
            for (a, b) in hill_curve(&xs, k).unwrap().iter().zip(hill_curve_fast(&xs, k).unwrap()) {
                prop_assert!((a.gamma - b.gamma).abs() < 1e-9);
                prop_assert!((a.gamma_star - b.gamma_star).abs() < 1e-9);
            }
        }

        #[test]
        fn risk_convex_along_segments(
            a in prop::collection::vec(-3.0f64..3.0, 6),
            b in prop::collection::vec(-3.0f64..3.0, 6),
            xs in prop::collection::vec(-5.0f64..5.0, 30),
            ys in prop::collection::vec(-5.0f64..5.0, 20),
        ) {
            let data = RegressionData::new(3, 2, xs, ys).unwrap();
            let ta = DMatrix::from_column_slice(2, 3, &a);
            let tb = DMatrix::from_column_slice(2, 3, &b);
            let mid = (&ta + &tb) * 0.5;
            let ra = empirical_l1_risk(&ta, &data).unwrap();
            let rb = empirical_l1_risk(&tb, &data).unwrap();
            prop_assert!(empirical_l1_risk(&mid, &data).unwrap() <= (ra + rb) / 2.0 + 1e-12);
        }

        #[test]
        fn aggregate_mean_exact(xs in prop::collection::vec(-1e3f64..1e3, 1..50)) {
            let s = aggregate(&xs).unwrap();
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            prop_assert!((s.mean - mean).abs() < 1e-12);
            prop_assert!(s.q1 <= s.median && s.median <= s.q3);
        }
    }
}
