//! The three estimators on an observed series, with checkpointed forecasts.

use serde::Serialize;

use crate::data::RegressionData;
use crate::error::{Error, Result};
use crate::evaluation::{delta_comparison, empirical_l1_risk, log10_error, prediction_error};
use crate::losses::{LossSpec, PenaltySpec};
use crate::optimizer::{sgd_run, Sampling, SgdConfig};
use crate::rng::{splitmix64, RngStream};
use crate::series::TimeSeries;
use crate::var_model::VarCoefficients;

use super::config::{ModelConfig, RealDataConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckpointRow {
    pub step: usize,
    pub loss: String,
    pub risk: f64,
    pub pred_error: f64,
    pub log10_pred_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckpointDelta {
    pub step: usize,
    /// `"lad-psi_alpha"`, `"lad-huber"` or `"huber-psi_alpha"`.
    pub comparison: String,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealDataReport {
    pub config: RealDataConfig,
    pub series: String,
    pub dim: usize,
    pub rows: Vec<CheckpointRow>,
    pub deltas: Vec<CheckpointDelta>,
    /// Step at which each loss dropped its penalty, in ψ_α, LAD, Huber order.
    pub penalty_drop_steps: Vec<(String, Option<usize>)>,
}

impl RealDataReport {
    pub fn error_at(&self, step: usize, loss: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.step == step && r.loss == loss)
            .map(|r| r.pred_error)
    }
}

/// Fit ψ_α, LAD and Huber by uniform-sampling SGD on the first `n_train`
/// pairs and forecast the next `horizon` observations from every checkpoint.
pub fn run_real_data(series: &TimeSeries, cfg: &RealDataConfig) -> Result<RealDataReport> {
    cfg.validate()?;
    let (p, d) = (cfg.p, series.dim());
    let needed = p + cfg.n_train + cfg.horizon;
    if series.len() < needed {
        return Err(Error::Parameter(format!(
            "series has {} rows but p + n_train + L = {needed} are needed",
            series.len()
        )));
    }
    let data = RegressionData::var_design(series, p, p..p + cfg.n_train)?;
    let history = series.slice(0..p + cfg.n_train)?;
    let truth = series.slice(p + cfg.n_train..needed)?.to_matrix();
    let theta0 = cfg.theta0.resolve(&ModelConfig::default(), d, p)?;
    let rng = RngStream::new(splitmix64(cfg.seed), 0);

    let mut checkpoints = cfg.checkpoints.clone();
    checkpoints.sort_unstable();
    checkpoints.dedup();

    let losses = [cfg.psi_loss(), LossSpec::Absolute, cfg.huber_loss()];
    let mut rows = Vec::new();
    let mut drops = Vec::new();
    for loss in losses {
        let sgd = SgdConfig {
            loss,
            penalty: PenaltySpec::new(cfg.gamma),
            eta: cfg.eta,
            steps: cfg.n_iter,
            theta0: theta0.clone(),
            sampling: Sampling::UniformWithReplacement,
            c0: cfg.c0,
            risk_eval_stride: cfg.risk_eval_stride,
            projection: None,
        };
        let mut snapshots = Vec::with_capacity(checkpoints.len());
        let mut next = 0;
        let summary = sgd_run(&data, &sgd, &mut rng.clone(), |k, theta| {
            if checkpoints.get(next) == Some(&k) {
                snapshots.push((k, theta.clone()));
                next += 1;
            }
        })?;
        drops.push((loss.name().to_string(), summary.penalty_drop_step));
        for (step, theta) in snapshots {
            let risk = empirical_l1_risk(&theta, &data)?;
            let pred_error = prediction_error(&VarCoefficients::from_stacked(&theta, p)?, &history, &truth)?;
            if !pred_error.is_finite() || !risk.is_finite() {
                return Err(Error::NonFinite {
                    step,
                    what: format!("{} checkpoint", loss.name()),
                });
            }
            rows.push(CheckpointRow {
                step,
                loss: loss.name().to_string(),
                risk,
                pred_error,
                log10_pred_error: log10_error(pred_error),
            });
        }
    }

    let mut report = RealDataReport {
        config: cfg.clone(),
        series: series.name.clone(),
        dim: d,
        rows,
        deltas: Vec::new(),
        penalty_drop_steps: drops,
    };
    for &step in &checkpoints {
        for (a, b) in [("lad", "psi_alpha"), ("lad", "huber"), ("huber", "psi_alpha")] {
            let (ea, eb) = (report.error_at(step, a), report.error_at(step, b));
            if let (Some(ea), Some(eb)) = (ea, eb) {
                report.deltas.push(CheckpointDelta {
                    step,
                    comparison: format!("{a}-{b}"),
                    delta: delta_comparison(ea, eb)?,
                });
            }
        }
    }
    Ok(report)
}
