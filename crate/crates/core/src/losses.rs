//! Per-sample objectives on the Euclidean residual `r = |y − θx|`:
//!
//! * `PsiAlpha`: `ψ_α(λ r) / λ` with the Catoni-type truncation
//!   `ψ_α(u) = log(1 + u + u^α/α)` for `u ≥ 0`, extended as an odd function;
//! * `Huber`: `h_τ(σ r) / σ`;
//! * `Absolute`: `r`.
//!
//! Plus the entrywise `ℓ₁,₁` penalty and its sign subgradient.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::residual_into;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossSpec {
    PsiAlpha { alpha: f64, lambda: f64 },
    Huber { tau: f64, sigma: f64 },
    Absolute,
}

impl LossSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LossSpec::PsiAlpha { alpha, lambda } => {
                if !(alpha > 1.0 && alpha <= 2.0) {
                    return Err(Error::Parameter(format!("alpha must lie in (1, 2], got {alpha}")));
                }
                if !(lambda > 0.0 && lambda.is_finite()) {
                    return Err(Error::Parameter(format!("lambda must be positive, got {lambda}")));
                }
            }
            LossSpec::Huber { tau, sigma } => {
                if !(tau > 0.0 && tau.is_finite() && sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::Parameter(format!(
                        "Huber tau and sigma must be positive, got tau={tau}, sigma={sigma}"
                    )));
                }
            }
            LossSpec::Absolute => {}
        }
        Ok(())
    }

    /// Short label used in reports: `psi_alpha`, `huber`, `lad`.
    pub fn name(&self) -> &'static str {
        match self {
            LossSpec::PsiAlpha { .. } => "psi_alpha",
            LossSpec::Huber { .. } => "huber",
            LossSpec::Absolute => "lad",
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match *self {
            LossSpec::PsiAlpha { alpha, .. } => Some(alpha),
            _ => None,
        }
    }

    /// Loss as a function of the residual norm.
    #[inline]
    pub fn value_at(&self, r: f64) -> f64 {
        match *self {
            LossSpec::PsiAlpha { alpha, lambda } => psi_alpha(lambda * r, alpha) / lambda,
            LossSpec::Huber { tau, sigma } => huber(sigma * r, tau) / sigma,
            LossSpec::Absolute => r,
        }
    }

    /// `d/dr` of [`LossSpec::value_at`] for `r > 0`.
    #[inline]
    pub fn weight(&self, r: f64) -> f64 {
        match *self {
            LossSpec::PsiAlpha { alpha, lambda } => psi_alpha_deriv(lambda * r, alpha),
            LossSpec::Huber { tau, sigma } => (sigma * r).min(tau),
            LossSpec::Absolute => 1.0,
        }
    }
}

/// Sign of the ℓ₁,₁ penalty's weight; `active = false` disables it entirely.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub gamma: f64,
    #[serde(default = "default_true")]
    pub active: bool,
}

fn default_true() -> bool {
    true
}

impl PenaltySpec {
    pub fn new(gamma: f64) -> Self {
        Self { gamma, active: true }
    }

    pub fn none() -> Self {
        Self {
            gamma: 0.0,
            active: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.gamma >= 0.0 && self.gamma.is_finite() {
            Ok(())
        } else {
            Err(Error::Parameter(format!(
                "penalty gamma must be >= 0, got {}",
                self.gamma
            )))
        }
    }

    pub fn effective_gamma(&self) -> f64 {
        if self.active {
            self.gamma
        } else {
            0.0
        }
    }
}

/// `log(1 + r + r^α/α)` for `r ≥ 0`, `−log(1 − r + |r|^α/α)` for `r < 0`.
#[inline]
pub fn psi_alpha(r: f64, alpha: f64) -> f64 {
    let a = r.abs();
    let v = (a + a.powf(alpha) / alpha).ln_1p();
    if r < 0.0 {
        -v
    } else {
        v
    }
}

/// Derivative of [`psi_alpha`]: `(1 + |r|^{α−1}) / (1 + |r| + |r|^α/α)`, even in `r`.
#[inline]
pub fn psi_alpha_deriv(r: f64, alpha: f64) -> f64 {
    let a = r.abs();
    if a == 0.0 {
        return 1.0;
    }
    let pa1 = a.powf(alpha - 1.0);
    (1.0 + pa1) / (1.0 + a + a * pa1 / alpha)
}

/// `r²/2` for `|r| ≤ τ`, `τ|r| − τ²/2` beyond.
#[inline]
pub fn huber(r: f64, tau: f64) -> f64 {
    let a = r.abs();
    if a <= tau {
        0.5 * a * a
    } else {
        tau * a - 0.5 * tau * tau
    }
}

fn check_dims(y: &[f64], x: &[f64], theta: &DMatrix<f64>) -> Result<()> {
    if theta.nrows() != y.len() || theta.ncols() != x.len() {
        return Err(Error::Dimension(format!(
            "theta is {}x{} but y has {} and x has {} entries",
            theta.nrows(),
            theta.ncols(),
            y.len(),
            x.len()
        )));
    }
    Ok(())
}

/// Loss of one pair at `theta`.
pub fn sample_loss(spec: &LossSpec, y: &[f64], x: &[f64], theta: &DMatrix<f64>) -> Result<f64> {
    check_dims(y, x, theta)?;
    let mut e = vec![0.0; y.len()];
    Ok(spec.value_at(residual_into(theta, x, y, &mut e)))
}

/// Subgradient `−w(r) (e/r) xᵀ` with `e = y − θx`; the zero matrix at `r = 0`.
pub fn sample_subgradient(spec: &LossSpec, y: &[f64], x: &[f64], theta: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_dims(y, x, theta)?;
    let mut e = vec![0.0; y.len()];
    let r = residual_into(theta, x, y, &mut e);
    let mut g = DMatrix::zeros(y.len(), x.len());
    if r > 0.0 {
        let c = -spec.weight(r) / r;
        for (j, &xj) in x.iter().enumerate() {
            for (i, &ei) in e.iter().enumerate() {
                g[(i, j)] = c * ei * xj;
            }
        }
    }
    Ok(g)
}

/// `Σ |θ_ij|`.
pub fn penalty_value(theta: &DMatrix<f64>) -> f64 {
    theta.iter().map(|v| v.abs()).sum()
}

/// `γ · sign(θ_ij)` with `sign(0) = 0`.
pub fn penalty_subgradient(theta: &DMatrix<f64>, gamma: f64) -> DMatrix<f64> {
    theta.map(|v| gamma * sign0(v))
}

#[inline]
pub(crate) fn sign0(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn psi_examples() {
        for a in [1.05, 1.5, 2.0] {
            assert_eq!(psi_alpha(0.0, a), 0.0);
        }
        assert_relative_eq!(psi_alpha(1.0, 2.0), 2.5f64.ln(), max_relative = 1e-15);
        assert_relative_eq!(psi_alpha(-1.0, 1.5), -(8.0f64 / 3.0).ln(), max_relative = 1e-15);
    }

    #[test]
    fn psi_derivative_examples() {
        assert_eq!(psi_alpha_deriv(0.0, 1.3), 1.0);
        assert_relative_eq!(psi_alpha_deriv(1.0, 2.0), 0.8, max_relative = 1e-15);
        for a in [1.1, 1.5, 2.0] {
            for r in [-2.0, -0.5, 0.5, 2.0] {
                let h = 1e-6;
                let fd = (psi_alpha(r + h, a) - psi_alpha(r - h, a)) / (2.0 * h);
                assert_relative_eq!(psi_alpha_deriv(r, a), fd, max_relative = 1e-6);
            }
        }
        // one-sided limits at 0 both equal 1
        assert_relative_eq!(psi_alpha_deriv(1e-12, 1.5), 1.0, max_relative = 1e-5);
        assert_relative_eq!(psi_alpha_deriv(-1e-12, 1.5), 1.0, max_relative = 1e-5);
    }

    #[test]
    fn huber_examples() {
        assert_eq!(huber(0.0, 0.5), 0.0);
        assert_relative_eq!(huber(0.3, 0.5), 0.045, max_relative = 1e-14);
        assert_relative_eq!(huber(1.0, 0.5), 0.375, max_relative = 1e-14);
        assert_relative_eq!(huber(-1.0, 0.5), 0.375, max_relative = 1e-14);
    }

    #[test]
    fn sample_loss_examples() {
        let specs = [
            LossSpec::PsiAlpha {
                alpha: 1.5,
                lambda: 0.3,
            },
            LossSpec::Huber { tau: 0.5, sigma: 2.0 },
            LossSpec::Absolute,
        ];
        let theta = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, -1.0, 0.5]);
        let x = [1.0, -1.0];
        let y = [-1.0, -1.5];
        for s in &specs {
            assert_eq!(sample_loss(s, &y, &x, &theta).unwrap(), 0.0);
        }
        let one = DMatrix::from_element(1, 1, 1.0);
        assert_eq!(sample_loss(&LossSpec::Absolute, &[3.0], &[1.0], &one).unwrap(), 2.0);
        let zero = DMatrix::zeros(1, 1);
        let psi = LossSpec::PsiAlpha {
            alpha: 2.0,
            lambda: 1.0,
        };
        assert_relative_eq!(
            sample_loss(&psi, &[1.0], &[1.0], &zero).unwrap(),
            2.5f64.ln(),
            max_relative = 1e-15
        );
        assert!(matches!(
            sample_loss(&psi, &[1.0, 2.0], &[1.0], &zero),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn subgradient_examples() {
        let theta = DMatrix::from_element(1, 1, 2.0);
        let g = sample_subgradient(&LossSpec::Absolute, &[2.0], &[1.0], &theta).unwrap();
        assert_eq!(g[(0, 0)], 0.0);
        let zero = DMatrix::zeros(1, 1);
        let g = sample_subgradient(&LossSpec::Absolute, &[2.0], &[1.0], &zero).unwrap();
        assert_eq!(g[(0, 0)], -1.0);
        let psi = LossSpec::PsiAlpha {
            alpha: 2.0,
            lambda: 1.0,
        };
        let g = sample_subgradient(&psi, &[1.0], &[1.0], &zero).unwrap();
        assert_relative_eq!(g[(0, 0)], -0.8, max_relative = 1e-15);
    }

    #[test]
    fn penalty_examples() {
        let z = DMatrix::<f64>::zeros(2, 2);
        assert_eq!(penalty_value(&z), 0.0);
        assert_eq!(penalty_subgradient(&z, 0.3), z);
        let t = DMatrix::from_row_slice(2, 2, &[1.0, -2.0, 3.0, 0.0]);
        assert_eq!(penalty_value(&t), 6.0);
        let t = DMatrix::from_row_slice(1, 2, &[2.0, -3.0]);
        assert_eq!(
            penalty_subgradient(&t, 0.01),
            DMatrix::from_row_slice(1, 2, &[0.01, -0.01])
        );
    }

    #[test]
    fn validation() {
        assert!(LossSpec::PsiAlpha {
            alpha: 1.0,
            lambda: 1.0
        }
        .validate()
        .is_err());
        assert!(LossSpec::PsiAlpha {
            alpha: 2.1,
            lambda: 1.0
        }
        .validate()
        .is_err());
        assert!(LossSpec::PsiAlpha {
            alpha: 2.0,
            lambda: 0.0
        }
        .validate()
        .is_err());
        assert!(LossSpec::Huber { tau: 0.0, sigma: 1.0 }.validate().is_err());
        assert!(PenaltySpec::new(-0.1).validate().is_err());
    }

    proptest! {
        #[test]
        fn psi_is_odd(r in -1e3f64..1e3, alpha in 1.001f64..2.0) {
            prop_assert_eq!(psi_alpha(-r, alpha), -psi_alpha(r, alpha));
        }

        #[test]
        fn psi_is_monotone(a in -50.0f64..50.0, b in -50.0f64..50.0, alpha in 1.001f64..2.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(psi_alpha(lo, alpha) <= psi_alpha(hi, alpha));
        }

        #[test]
        fn truncation_dominance(r in 0.0f64..1e4, lambda in 1e-3f64..10.0, alpha in 1.001f64..2.0) {
            let lhs = psi_alpha(lambda * r, alpha) / lambda;
            let rhs = r + lambda.powf(alpha - 1.0) * r.powf(alpha) / alpha;
            prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-300);
        }

        #[test]
        fn weight_bound(u in 0.0f64..1e6, alpha in 1.001f64..2.0) {
            let w = psi_alpha_deriv(u, alpha);
            prop_assert!(w > 0.0 && w <= 1.0 + u.powf(alpha - 1.0));
        }
    }
}
