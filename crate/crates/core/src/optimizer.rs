//! Constant-step stochastic subgradient descent for the penalised objectives
//!
//! ```text
//! θ_{k+1} = θ_k − η ( ∇_θ ℓ(y_k, x_k, θ_k) + γ sign(θ_k) )
//! ```
//!
//! with the penalty-drop rule: once the relative change of the empirical ℓ₁
//! risk on the full training set falls to `c0` or below, `γ` is set to zero
//! for the rest of the run.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::{residual_into, RegressionData};
use crate::error::{Error, Result};
use crate::evaluation::empirical_l1_risk;
use crate::losses::{sign0, LossSpec, PenaltySpec};
use crate::rng::RngStream;
use crate::var_model::operator_norm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// Step `k` consumes pair `k`; one pass in time order.
    #[default]
    SequentialPass,
    /// Step `k` draws its pair uniformly from the training set.
    UniformWithReplacement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgdConfig {
    pub loss: LossSpec,
    pub penalty: PenaltySpec,
    pub eta: f64,
    pub steps: usize,
    pub theta0: DMatrix<f64>,
    pub sampling: Sampling,
    /// Penalty-drop threshold on `|R(θ_{k+1}) − R(θ_k)| / R(θ_k)`.
    pub c0: Option<f64>,
    /// The drop rule is checked after steps divisible by this stride.
    pub risk_eval_stride: usize,
    /// Optional cap on `‖θ‖_op`; iterates are rescaled onto the ball.
    pub projection: Option<f64>,
}

impl SgdConfig {
    pub fn new(loss: LossSpec, theta0: DMatrix<f64>, eta: f64, steps: usize) -> Self {
        Self {
            loss,
            penalty: PenaltySpec::none(),
            eta,
            steps,
            theta0,
            sampling: Sampling::SequentialPass,
            c0: None,
            risk_eval_stride: 1,
            projection: None,
        }
    }

    pub fn with_penalty(mut self, gamma: f64) -> Self {
        self.penalty = PenaltySpec::new(gamma);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.loss.validate()?;
        self.penalty.validate()?;
        // eta = 0 is admitted as the identity update
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::Parameter(format!(
                "learning rate must lie in (0, 1], got {}",
                self.eta
            )));
        }
        if let Some(c0) = self.c0 {
            if !(c0 > 0.0) {
                return Err(Error::Parameter(format!("c0 must be positive, got {c0}")));
            }
        }
        if self.risk_eval_stride == 0 {
            return Err(Error::Parameter("risk_eval_stride must be at least 1".into()));
        }
        if let Some(cap) = self.projection {
            if !(cap > 0.0) {
                return Err(Error::Parameter(format!("projection cap must be positive, got {cap}")));
            }
        }
        Ok(())
    }
}

/// One evaluation of the penalty-drop rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskCheck {
    pub step: usize,
    pub risk: f64,
    pub delta: f64,
}

/// Outcome of a streamed run (iterates go to the observer).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunSummary {
    pub penalty_drop_step: Option<usize>,
    pub risk_checks: Vec<RiskCheck>,
}

/// Every iterate `θ₀ … θ_N` of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct FitTrajectory {
    pub thetas: Vec<DMatrix<f64>>,
    pub penalty_drop_step: Option<usize>,
    pub risk_checks: Vec<RiskCheck>,
}

impl FitTrajectory {
    pub fn last(&self) -> &DMatrix<f64> {
        self.thetas.last().expect("trajectory holds at least theta0")
    }
}

/// Reusable per-run buffers.
struct Workspace {
    e: Vec<f64>,
}

/// Update `theta` in place. Returns the loss weight used (0 at a zero residual).
#[inline]
fn step_in_place(
    theta: &mut DMatrix<f64>,
    x: &[f64],
    y: &[f64],
    loss: &LossSpec,
    eta: f64,
    gamma: f64,
    ws: &mut Workspace,
) -> f64 {
    let rows = theta.nrows();
    let r = residual_into(theta, x, y, &mut ws.e);
    let (w, c) = if r > 0.0 {
        let w = loss.weight(r);
        (w, -w / r)
    } else {
        (0.0, 0.0)
    };
    let data = theta.as_mut_slice();
    for (j, &xj) in x.iter().enumerate() {
        let col = &mut data[j * rows..(j + 1) * rows];
        let cx = c * xj;
        for (t, &ei) in col.iter_mut().zip(&ws.e) {
            let g = cx * ei + gamma * sign0(*t);
            *t -= eta * g;
        }
    }
    w
}

fn project(theta: &mut DMatrix<f64>, cap: f64) -> Result<()> {
    let norm = operator_norm(theta)?;
    if norm > cap {
        *theta *= cap / norm;
    }
    Ok(())
}

/// `θ_{k+1}` from `θ_k` and one pair, with the penalty at full strength when
/// `penalty_active`.
pub fn sgd_step(
    theta: &DMatrix<f64>,
    x: &[f64],
    y: &[f64],
    config: &SgdConfig,
    penalty_active: bool,
) -> Result<DMatrix<f64>> {
    if theta.nrows() != y.len() || theta.ncols() != x.len() {
        return Err(Error::Dimension(format!(
            "theta is {}x{} but y has {} and x has {} entries",
            theta.nrows(),
            theta.ncols(),
            y.len(),
            x.len()
        )));
    }
    let gamma = if penalty_active {
        config.penalty.effective_gamma()
    } else {
        0.0
    };
    let mut next = theta.clone();
    let mut ws = Workspace { e: vec![0.0; y.len()] };
    step_in_place(&mut next, x, y, &config.loss, config.eta, gamma, &mut ws);
    if let Some(cap) = config.projection {
        project(&mut next, cap)?;
    }
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            step: 1,
            what: "parameter update".into(),
        });
    }
    Ok(next)
}

/// Run `config.steps` updates, handing `(k, θ_k)` for `k = 0..=N` to `observe`.
/// `rng` drives `UniformWithReplacement` sampling and is untouched otherwise.
pub fn sgd_run<F>(data: &RegressionData, config: &SgdConfig, rng: &mut RngStream, mut observe: F) -> Result<RunSummary>
where
    F: FnMut(usize, &DMatrix<f64>),
{
    config.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("no training pairs".into()));
    }
    data.check_theta(&config.theta0)?;
    if config.sampling == Sampling::SequentialPass && config.steps > data.len() {
        return Err(Error::Parameter(format!(
            "a sequential pass of {} steps needs that many pairs, have {}",
            config.steps,
            data.len()
        )));
    }

    let mut theta = config.theta0.clone();
    let mut ws = Workspace {
        e: vec![0.0; data.d_out()],
    };
    let mut summary = RunSummary::default();
    let mut penalty_on = config.penalty.active && config.penalty.gamma > 0.0;
    // R(θ_k) of the previous iterate, when known
    let mut prev_risk: Option<f64> = None;
    let mut prev_theta: Option<DMatrix<f64>> = None;

    observe(0, &theta);
    for k in 0..config.steps {
        let idx = match config.sampling {
            Sampling::SequentialPass => k,
            Sampling::UniformWithReplacement => rng.index(data.len()),
        };
        let check_now = config.c0.is_some() && penalty_on && (k + 1) % config.risk_eval_stride == 0;
        if check_now && prev_risk.is_none() {
            prev_theta = Some(theta.clone());
        }
        let gamma = if penalty_on { config.penalty.gamma } else { 0.0 };
        step_in_place(
            &mut theta,
            data.x(idx),
            data.y(idx),
            &config.loss,
            config.eta,
            gamma,
            &mut ws,
        );
        if let Some(cap) = config.projection {
            project(&mut theta, cap)?;
        }
        if !theta.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                step: k + 1,
                what: format!("{} update diverged", config.loss.name()),
            });
        }

        if check_now {
            let before = match (prev_risk, prev_theta.take()) {
                (Some(r), _) => r,
                (None, Some(t)) => empirical_l1_risk(&t, data)?,
                (None, None) => unreachable!("previous iterate kept for the check"),
            };
            let after = empirical_l1_risk(&theta, data)?;
            if !after.is_finite() || !before.is_finite() {
                return Err(Error::NonFinite {
                    step: k + 1,
                    what: "empirical risk".into(),
                });
            }
            let delta = if before > 0.0 {
                (after - before).abs() / before
            } else if after == before {
                0.0
            } else {
                f64::INFINITY
            };
            summary.risk_checks.push(RiskCheck {
                step: k + 1,
                risk: after,
                delta,
            });
            if delta <= config.c0.unwrap_or(f64::NEG_INFINITY) {
                penalty_on = false;
                summary.penalty_drop_step = Some(k + 1);
            }
            prev_risk = if config.risk_eval_stride == 1 {
                Some(after)
            } else {
                None
            };
        } else {
            prev_risk = None;
        }
        observe(k + 1, &theta);
    }
    Ok(summary)
}

/// [`sgd_run`] keeping every iterate.
pub fn sgd_fit(data: &RegressionData, config: &SgdConfig, rng: &mut RngStream) -> Result<FitTrajectory> {
    let mut thetas = Vec::with_capacity(config.steps + 1);
    let summary = sgd_run(data, config, rng, |_, t| thetas.push(t.clone()))?;
    Ok(FitTrajectory {
        thetas,
        penalty_drop_step: summary.penalty_drop_step,
        risk_checks: summary.risk_checks,
    })
}

/// Settings shared by the three estimators in a paired comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedSettings {
    pub theta0: DMatrix<f64>,
    pub eta: f64,
    pub steps: usize,
    pub gamma: f64,
    pub sampling: Sampling,
    pub c0: Option<f64>,
    pub risk_eval_stride: usize,
    pub psi: LossSpec,
    pub huber: LossSpec,
}

impl SharedSettings {
    pub fn config_for(&self, loss: LossSpec) -> SgdConfig {
        SgdConfig {
            loss,
            penalty: PenaltySpec::new(self.gamma),
            eta: self.eta,
            steps: self.steps,
            theta0: self.theta0.clone(),
            sampling: self.sampling,
            c0: self.c0,
            risk_eval_stride: self.risk_eval_stride,
            projection: None,
        }
    }
}

/// ψ_α, absolute and Huber fits on the same data from the same start; under
/// uniform sampling all three see the same index sequence.
pub fn fit_all_three(data: &RegressionData, shared: &SharedSettings, rng: &RngStream) -> Result<[FitTrajectory; 3]> {
    let run = |loss: LossSpec| sgd_fit(data, &shared.config_for(loss), &mut rng.clone());
    Ok([run(shared.psi)?, run(LossSpec::Absolute)?, run(shared.huber)?])
}
