//! TOML configuration for simulation and real-data runs.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::LossSpec;
use crate::optimizer::Sampling;
use crate::tail_dist::NoiseSpec;
use crate::var_model::{VarCoefficients, VarPreset};

use super::ingest::Transform;

pub const DEFAULT_REPLICATIONS: usize = 200;

/// VAR coefficients, either a named preset or explicit lag matrices given as
/// lists of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<VarPreset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<Vec<Vec<Vec<f64>>>>,
}

impl ModelConfig {
    pub fn preset(preset: VarPreset) -> Self {
        Self {
            preset: Some(preset),
            phi: None,
        }
    }

    pub fn coefficients(&self) -> Result<VarCoefficients> {
        match (&self.preset, &self.phi) {
            (Some(p), None) => Ok(p.coefficients()),
            (None, Some(phi)) => {
                let lags = phi
                    .iter()
                    .map(|rows| rows_to_matrix(rows))
                    .collect::<Result<Vec<_>>>()?;
                VarCoefficients::new(lags)
            }
            _ => Err(Error::Config("model needs exactly one of `preset` or `phi`".into())),
        }
    }

    pub fn label(&self) -> String {
        match (&self.preset, &self.phi) {
            (Some(p), _) => p.label().to_string(),
            (None, Some(phi)) => format!("VAR({})", phi.len()),
            _ => "VAR".into(),
        }
    }
}

pub(crate) fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let ncols = rows.first().map(Vec::len).unwrap_or(0);
    if rows.is_empty() || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Config("matrix rows must be nonempty and of equal length".into()));
    }
    Ok(DMatrix::from_row_iterator(
        rows.len(),
        ncols,
        rows.iter().flatten().copied(),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Theta0 {
    Named(Theta0Kind),
    Rows(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Theta0Kind {
    /// `2·I` for the VAR(1) preset, `[I, I]` for VAR(2).
    Preset,
    Zeros,
}

impl Default for Theta0 {
    fn default() -> Self {
        Theta0::Named(Theta0Kind::Preset)
    }
}

impl Theta0 {
    pub fn resolve(&self, model: &ModelConfig, d: usize, p: usize) -> Result<DMatrix<f64>> {
        let theta = match self {
            Theta0::Named(Theta0Kind::Zeros) => DMatrix::zeros(d, d * p),
            Theta0::Named(Theta0Kind::Preset) => match model.preset {
                Some(preset) => preset.default_theta0(),
                None => return Err(Error::Config("theta0 = \"preset\" needs a preset model".into())),
            },
            Theta0::Rows(rows) => rows_to_matrix(rows)?,
        };
        if theta.shape() != (d, d * p) {
            return Err(Error::Config(format!(
                "theta0 must be {d}x{}, got {:?}",
                d * p,
                theta.shape()
            )));
        }
        Ok(theta)
    }
}

/// A loss entry; ψ_α entries expand to one cell per listed α.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LossEntry {
    PsiAlpha { alphas: Vec<f64>, lambda: f64 },
    Huber { tau: f64, sigma: f64 },
    Absolute,
}

pub fn expand_losses(entries: &[LossEntry]) -> Vec<LossSpec> {
    entries
        .iter()
        .flat_map(|e| match e {
            LossEntry::PsiAlpha { alphas, lambda } => alphas
                .iter()
                .map(|&alpha| LossSpec::PsiAlpha { alpha, lambda: *lambda })
                .collect(),
            LossEntry::Huber { tau, sigma } => vec![LossSpec::Huber {
                tau: *tau,
                sigma: *sigma,
            }],
            LossEntry::Absolute => vec![LossSpec::Absolute],
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_n_train")]
    pub n_train: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_threads")]
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            replications: DEFAULT_REPLICATIONS,
            n_train: default_n_train(),
            burn_in: default_burn_in(),
            horizon: default_horizon(),
            master_seed: 0,
            threads: default_threads(),
        }
    }
}

fn default_replications() -> usize {
    DEFAULT_REPLICATIONS
}
fn default_n_train() -> usize {
    800
}
fn default_burn_in() -> usize {
    crate::var_model::DEFAULT_BURN_IN
}
fn default_horizon() -> usize {
    10
}
fn default_threads() -> usize {
    1
}
fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SgdSection {
    pub eta: f64,
    /// Number of steps; defaults to one sequential pass over the training pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub theta0: Theta0,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(default = "default_stride")]
    pub risk_eval_stride: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Record the mean risk every this many steps (the last step is always kept).
    #[serde(default = "default_stride")]
    pub trajectory_stride: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { trajectory_stride: 1 }
    }
}

/// One simulation scenario: a VAR model, a noise law and the losses to compare.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub noise: NoiseSpec,
    #[serde(default)]
    pub run: RunConfig,
    pub sgd: SgdSection,
    pub losses: Vec<LossEntry>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    /// The simulation-study settings for one model and noise law.
    pub fn study_scenario(preset: VarPreset, noise: NoiseSpec) -> Self {
        let shape = noise.shape().unwrap_or(2.0);
        let alphas = psi_alphas_for_shape(shape);
        let gamma = match preset {
            VarPreset::Var1Sim => 0.01,
            VarPreset::Var2Sim => 0.005,
        };
        Self {
            model: ModelConfig::preset(preset),
            noise: noise.centered(),
            run: RunConfig::default(),
            sgd: SgdSection {
                eta: 0.01,
                steps: None,
                gamma,
                theta0: Theta0::default(),
                sampling: Sampling::SequentialPass,
                c0: None,
                risk_eval_stride: 1,
                projection: None,
            },
            losses: vec![
                LossEntry::PsiAlpha { alphas, lambda: 0.035 },
                LossEntry::Absolute,
                LossEntry::Huber { tau: 0.5, sigma: 1.0 },
            ],
            output: OutputConfig::default(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises to TOML")
    }

    pub fn steps(&self) -> usize {
        self.sgd.steps.unwrap_or(self.run.n_train)
    }

    pub fn losses(&self) -> Vec<LossSpec> {
        expand_losses(&self.losses)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| Error::Config(e.to_string());
        let coeffs = self.model.coefficients().map_err(cfg_err)?;
        self.noise.validate().map_err(cfg_err)?;
        if self.run.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if self.run.n_train == 0 || self.run.horizon == 0 {
            return Err(Error::Config("n_train and horizon must be at least 1".into()));
        }
        if self.run.threads == 0 {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        if self.output.trajectory_stride == 0 {
            return Err(Error::Config("trajectory_stride must be at least 1".into()));
        }
        if self.losses.is_empty() {
            return Err(Error::Config("at least one loss is required".into()));
        }
        let shape = self.noise.shape();
        for loss in self.losses() {
            loss.validate().map_err(cfg_err)?;
            if let (Some(a), Some(s)) = (loss.alpha(), shape) {
                if a >= s {
                    return Err(Error::Config(format!("alpha {a} must be below the noise shape {s}")));
                }
            }
        }
        let theta0 = self.sgd.theta0.resolve(&self.model, coeffs.dim(), coeffs.order())?;
        let probe = crate::optimizer::SgdConfig {
            loss: LossSpec::Absolute,
            penalty: crate::losses::PenaltySpec::new(self.sgd.gamma),
            eta: self.sgd.eta,
            steps: self.steps(),
            theta0,
            sampling: self.sgd.sampling,
            c0: self.sgd.c0,
            risk_eval_stride: self.sgd.risk_eval_stride,
            projection: self.sgd.projection,
        };
        probe.validate().map_err(cfg_err)?;
        if self.sgd.sampling == Sampling::SequentialPass && self.steps() > self.run.n_train {
            return Err(Error::Config(format!(
                "a sequential pass of {} steps needs as many training pairs, n_train = {}",
                self.steps(),
                self.run.n_train
            )));
        }
        Ok(())
    }
}

/// ψ_α exponents paired with each noise shape in the simulation study.
pub fn psi_alphas_for_shape(shape: f64) -> Vec<f64> {
    if (shape - 1.2).abs() < 1e-9 {
        vec![1.05, 1.1, 1.15, 1.18]
    } else if (shape - 1.5).abs() < 1e-9 {
        vec![1.1, 1.2, 1.3, 1.4]
    } else if (shape - 1.8).abs() < 1e-9 {
        vec![1.2, 1.4, 1.6, 1.7]
    } else {
        let top = shape.min(2.0);
        (1..=4).map(|i| 1.0 + (top - 1.0) * i as f64 / 5.0).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub path: PathBuf,
    #[serde(default)]
    pub transform: Transform,
    /// Column names to keep; all columns when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub columns: Option<Vec<String>>,
}

fn default_p() -> usize {
    1
}
fn default_real_eta() -> f64 {
    0.08
}
fn default_n_iter() -> usize {
    10_000
}
fn default_real_n_train() -> usize {
    190
}
fn default_checkpoints() -> Vec<usize> {
    (2..=20).map(|i| i * 500).collect()
}

/// Settings for fitting the three estimators to an observed series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealDataConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataSection>,
    #[serde(default = "default_p")]
    pub p: usize,
    #[serde(default = "default_real_n_train")]
    pub n_train: usize,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_n_iter")]
    pub n_iter: usize,
    #[serde(default = "default_real_eta")]
    pub eta: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(default = "default_stride")]
    pub risk_eval_stride: usize,
    #[serde(default = "default_checkpoints")]
    pub checkpoints: Vec<usize>,
    #[serde(default = "default_zeros")]
    pub theta0: Theta0,
    pub psi: PsiSection,
    pub huber: HuberSection,
    #[serde(default)]
    pub seed: u64,
}

fn default_zeros() -> Theta0 {
    Theta0::Named(Theta0Kind::Zeros)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsiSection {
    pub alpha: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HuberSection {
    pub tau: f64,
    pub sigma: f64,
}

impl RealDataConfig {
    /// The three real-data settings keyed by series width (20, 55 or 75).
    pub fn for_width(width: usize) -> Option<Self> {
        let (c0, lambda, tau, sigma) = match width {
            20 => (0.01, 0.020, 0.5, 8.0),
            55 => (0.03, 0.040, 0.2, 10.0),
            75 => (0.04, 0.080, 0.15, 12.0),
            _ => return None,
        };
        Some(Self {
            data: None,
            p: 1,
            n_train: default_real_n_train(),
            horizon: 10,
            n_iter: default_n_iter(),
            eta: 0.08,
            gamma: 0.5,
            c0: Some(c0),
            risk_eval_stride: 1,
            checkpoints: default_checkpoints(),
            theta0: default_zeros(),
            psi: PsiSection { alpha: 1.2, lambda },
            huber: HuberSection { tau, sigma },
            seed: 0,
        })
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises to TOML")
    }

    pub fn psi_loss(&self) -> LossSpec {
        LossSpec::PsiAlpha {
            alpha: self.psi.alpha,
            lambda: self.psi.lambda,
        }
    }

    pub fn huber_loss(&self) -> LossSpec {
        LossSpec::Huber {
            tau: self.huber.tau,
            sigma: self.huber.sigma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| Error::Config(e.to_string());
        self.psi_loss().validate().map_err(cfg_err)?;
        self.huber_loss().validate().map_err(cfg_err)?;
        if self.p == 0 || self.n_train == 0 {
            return Err(Error::Config("p and n_train must be at least 1".into()));
        }
        if self.horizon == 0 {
            return Err(Error::Config(
                "horizon L must be at least 1: there is no test window".into(),
            ));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::Config(format!("eta must lie in (0, 1], got {}", self.eta)));
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::Config(format!("gamma must be nonnegative, got {}", self.gamma)));
        }
        if let Some(c0) = self.c0 {
            if !(c0 > 0.0) {
                return Err(Error::Config(format!("c0 must be positive, got {c0}")));
            }
        }
        if self.risk_eval_stride == 0 {
            return Err(Error::Config("risk_eval_stride must be at least 1".into()));
        }
        if let Some(&bad) = self.checkpoints.iter().find(|&&k| k > self.n_iter) {
            return Err(Error::Config(format!(
                "checkpoint {bad} exceeds n_iter = {}",
                self.n_iter
            )));
        }
        Ok(())
    }
}
