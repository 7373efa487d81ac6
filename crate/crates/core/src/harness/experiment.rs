//! Replicated simulation studies.

use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::RegressionData;
use crate::error::{Error, Result};
use crate::evaluation::{aggregate, delta_comparison, empirical_l1_risk, log10_error, prediction_error, BoxSummary};
use crate::losses::{LossSpec, PenaltySpec};
use crate::optimizer::{sgd_run, SgdConfig};
use crate::rng::{splitmix64, RngStream};
use crate::var_model::{simulate, VarCoefficients};

use super::config::ExperimentConfig;

/// Aggregates for one (loss, α) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub loss: String,
    pub alpha: Option<f64>,
    /// `(step, mean risk)` over the successful replications.
    pub trajectory: Vec<(usize, f64)>,
    pub mean_final_risk: Option<f64>,
    pub mean_pred_error: Option<f64>,
    pub log_pred_error: Option<BoxSummary>,
    pub succeeded: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub reference: String,
    pub candidate: String,
    pub alpha: Option<f64>,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub model: String,
    pub noise: String,
    pub shape: Option<f64>,
    pub cells: Vec<CellReport>,
    /// Relative prediction-error changes against LAD and Huber.
    pub deltas: Vec<DeltaRow>,
    pub elapsed_secs: f64,
    pub threads: usize,
}

impl ExperimentReport {
    pub fn cell(&self, loss: &str, alpha: Option<f64>) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.loss == loss && c.alpha == alpha)
    }
}

struct CellOutcome {
    risks: Vec<f64>,
    pred_error: f64,
}

/// Steps at which the risk trajectory is recorded.
fn recorded_steps(steps: usize, stride: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..=steps).step_by(stride).collect();
    if out.last() != Some(&steps) {
        out.push(steps);
    }
    out
}

fn run_replication(
    cfg: &ExperimentConfig,
    coeffs: &VarCoefficients,
    theta0: &DMatrix<f64>,
    losses: &[LossSpec],
    record: &[usize],
    replication: u64,
) -> Result<Vec<Result<CellOutcome>>> {
    let seed = splitmix64(cfg.run.master_seed.wrapping_add(replication));
    let mut sim_rng = RngStream::new(seed, 0);
    let fit_rng = sim_rng.split(1);
    let p = coeffs.order();
    let n_train = cfg.run.n_train;
    let series = simulate(
        coeffs,
        &cfg.noise,
        p + n_train + cfg.run.horizon,
        cfg.run.burn_in,
        &mut sim_rng,
    )?;
    let data = RegressionData::var_design(&series, p, p..p + n_train)?;
    let history = series.slice(0..p + n_train)?;
    let truth = series.slice(p + n_train..series.len())?.to_matrix();

    Ok(losses
        .iter()
        .map(|&loss| {
            let sgd = SgdConfig {
                loss,
                penalty: PenaltySpec::new(cfg.sgd.gamma),
                eta: cfg.sgd.eta,
                steps: cfg.steps(),
                theta0: theta0.clone(),
                sampling: cfg.sgd.sampling,
                c0: cfg.sgd.c0,
                risk_eval_stride: cfg.sgd.risk_eval_stride,
                projection: cfg.sgd.projection,
            };
            let mut risks = Vec::with_capacity(record.len());
            let mut last = theta0.clone();
            let mut next = 0;
            sgd_run(&data, &sgd, &mut fit_rng.clone(), |k, theta| {
                if record.get(next) == Some(&k) {
                    risks.push(empirical_l1_risk(theta, &data));
                    next += 1;
                }
                if k == sgd.steps {
                    last.copy_from(theta);
                }
            })?;
            let risks = risks.into_iter().collect::<Result<Vec<f64>>>()?;
            if let Some(step) = risks.iter().position(|r| !r.is_finite()) {
                return Err(Error::NonFinite {
                    step: record[step],
                    what: "empirical risk".into(),
                });
            }
            let pred_error = prediction_error(&VarCoefficients::from_stacked(&last, p)?, &history, &truth)?;
            if !pred_error.is_finite() {
                return Err(Error::NonFinite {
                    step: sgd.steps,
                    what: "prediction error".into(),
                });
            }
            Ok(CellOutcome { risks, pred_error })
        })
        .collect())
}

/// Run every replication of `cfg` on a pool of `cfg.run.threads` workers and
/// fold the results in replication order. Replications whose fit diverges
/// are counted per cell and left out of the means.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let coeffs = cfg.model.coefficients()?;
    let radius = coeffs.companion().spectral_radius();
    if !coeffs.is_stable(1.0 - 1e-6) {
        return Err(Error::Unstable {
            radius,
            limit: 1.0 - 1e-6,
        });
    }
    let theta0 = cfg.sgd.theta0.resolve(&cfg.model, coeffs.dim(), coeffs.order())?;
    let losses = cfg.losses();
    let record = recorded_steps(cfg.steps(), cfg.output.trajectory_stride);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.run.threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<Result<Vec<Result<CellOutcome>>>> = pool.install(|| {
        (0..cfg.run.replications as u64)
            .into_par_iter()
            .map(|i| run_replication(cfg, &coeffs, &theta0, &losses, &record, i))
            .collect()
    });

    let mut sums = vec![vec![0.0; record.len()]; losses.len()];
    let mut finals = vec![Vec::new(); losses.len()];
    let mut preds = vec![Vec::new(); losses.len()];
    let mut failed = vec![0usize; losses.len()];
    for rep in outcomes {
        for (c, cell) in rep?.into_iter().enumerate() {
            match cell {
                Ok(out) => {
                    for (s, r) in sums[c].iter_mut().zip(&out.risks) {
                        *s += r;
                    }
                    finals[c].push(*out.risks.last().expect("final step recorded"));
                    preds[c].push(out.pred_error);
                }
                Err(e) if e.is_numeric() => failed[c] += 1,
                Err(e) => return Err(e),
            }
        }
    }

    let cells: Vec<CellReport> = losses
        .iter()
        .enumerate()
        .map(|(c, loss)| {
            let ok = finals[c].len();
            let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
            let logs: Vec<f64> = preds[c].iter().map(|&e| log10_error(e)).collect();
            CellReport {
                loss: loss.name().to_string(),
                alpha: loss.alpha(),
                trajectory: if ok == 0 {
                    Vec::new()
                } else {
                    record.iter().zip(&sums[c]).map(|(&k, s)| (k, s / ok as f64)).collect()
                },
                mean_final_risk: mean(&finals[c]),
                mean_pred_error: mean(&preds[c]),
                log_pred_error: aggregate(&logs).ok(),
                succeeded: ok,
                failed: failed[c],
            }
        })
        .collect();

    Ok(ExperimentReport {
        config: cfg.clone(),
        model: cfg.model.label(),
        noise: cfg.noise.name().to_string(),
        shape: cfg.noise.shape(),
        deltas: delta_rows(&cells),
        cells,
        elapsed_secs: start.elapsed().as_secs_f64(),
        threads: cfg.run.threads,
    })
}

fn delta_rows(cells: &[CellReport]) -> Vec<DeltaRow> {
    let find = |name: &str| cells.iter().find(|c| c.loss == name);
    let mut rows = Vec::new();
    let mut push = |reference: &CellReport, candidate: &CellReport| {
        let (Some(ea), Some(eb)) = (reference.mean_pred_error, candidate.mean_pred_error) else {
            return;
        };
        if let Ok(delta) = delta_comparison(ea, eb) {
            rows.push(DeltaRow {
                reference: reference.loss.clone(),
                candidate: candidate.loss.clone(),
                alpha: candidate.alpha,
                delta,
            });
        }
    };
    let (lad, huber) = (find("lad"), find("huber"));
    if let (Some(l), Some(h)) = (lad, huber) {
        push(l, h);
    }
    for psi in cells.iter().filter(|c| c.loss == "psi_alpha") {
        for reference in [lad, huber].into_iter().flatten() {
            push(reference, psi);
        }
    }
    rows
}
