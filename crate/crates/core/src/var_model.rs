//! VAR(p) coefficients, companion form, stability and simulation.
//!
//! `Z_{t+1} = Φ₁ Z_t + … + Φ_p Z_{t+1-p} + ε_{t+1}` with i.i.d. centered
//! innovation coordinates. Simulation starts from an all-zero history; the
//! burn-in (5000 rows by default) absorbs that transient.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::series::TimeSeries;
use crate::tail_dist::NoiseSpec;

pub const DEFAULT_BURN_IN: usize = 5000;

/// Relative tolerance and iteration cap of [`operator_norm`].
pub const OP_NORM_TOL: f64 = 1e-10;
pub const OP_NORM_MAX_ITER: usize = 10_000;

/// Default number of squarings in [`spectral_radius`].
pub const GELFAND_DEPTH: u32 = 30;

/// Lag matrices `Φ₁ … Φ_p`, each `d × d`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarCoefficients {
    phi: Vec<DMatrix<f64>>,
}

impl VarCoefficients {
    pub fn new(phi: Vec<DMatrix<f64>>) -> Result<Self> {
        let d = match phi.first() {
            Some(m) => m.nrows(),
            None => return Err(Error::Parameter("VAR order must be at least 1".into())),
        };
        if d == 0 {
            return Err(Error::Dimension("VAR dimension must be positive".into()));
        }
        for (i, m) in phi.iter().enumerate() {
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::Dimension(format!(
                    "Φ_{} is {}x{}, expected {d}x{d}",
                    i + 1,
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::Parameter(format!("Φ_{} has non-finite entries", i + 1)));
            }
        }
        Ok(Self { phi })
    }

    /// Diagonal lag matrices from per-lag diagonals.
    pub fn diagonal(diags: &[Vec<f64>]) -> Result<Self> {
        Self::new(
            diags
                .iter()
                .map(|d| DMatrix::from_diagonal(&DVector::from_row_slice(d)))
                .collect(),
        )
    }

    /// Split a stacked `d × pd` parameter `[Φ₁, …, Φ_p]`.
    pub fn from_stacked(theta: &DMatrix<f64>, p: usize) -> Result<Self> {
        let d = theta.nrows();
        if p == 0 || theta.ncols() != d * p {
            return Err(Error::Dimension(format!(
                "stacked parameter is {}x{}, expected {d}x{}",
                d,
                theta.ncols(),
                d * p
            )));
        }
        Self::new((0..p).map(|i| theta.columns(i * d, d).into_owned()).collect())
    }

    pub fn dim(&self) -> usize {
        self.phi[0].nrows()
    }

    pub fn order(&self) -> usize {
        self.phi.len()
    }

    pub fn lags(&self) -> &[DMatrix<f64>] {
        &self.phi
    }

    /// `θ = [Φ₁, …, Φ_p] ∈ R^{d × pd}`.
    pub fn stacked(&self) -> DMatrix<f64> {
        let (d, p) = (self.dim(), self.order());
        let mut theta = DMatrix::zeros(d, d * p);
        for (i, m) in self.phi.iter().enumerate() {
            theta.columns_mut(i * d, d).copy_from(m);
        }
        theta
    }

    pub fn companion(&self) -> CompanionMatrix {
        let (d, p) = (self.dim(), self.order());
        let mut psi = DMatrix::zeros(d * p, d * p);
        psi.rows_mut(0, d).copy_from(&self.stacked());
        for i in 1..p {
            psi.view_mut((i * d, (i - 1) * d), (d, d)).fill_with_identity();
        }
        CompanionMatrix { psi }
    }

    /// `ρ(Ψ) ≤ rho_max`.
    pub fn is_stable(&self, rho_max: f64) -> bool {
        spectral_radius(self.companion().matrix()) <= rho_max
    }
}

/// The `(dp) × (dp)` block matrix with `[Φ₁ … Φ_p]` on top and identities on
/// the block subdiagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CompanionMatrix {
    psi: DMatrix<f64>,
}

impl CompanionMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.psi
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.psi
    }

    pub fn spectral_radius(&self) -> f64 {
        spectral_radius(&self.psi)
    }

    /// Estimate of `C_op` in `‖Ψᵏ‖_op ≤ C_op ρᵏ` as `max_{1≤k≤k_max} ‖Ψᵏ‖_op / ρᵏ`.
    pub fn c_op_estimate(&self, rho: f64, k_max: usize) -> Result<f64> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::Parameter(format!("rho must be in (0, 1), got {rho}")));
        }
        let mut power = self.psi.clone();
        let mut best = operator_norm(&power)? / rho;
        for k in 2..=k_max {
            power = &power * &self.psi;
            best = best.max(operator_norm(&power)? / rho.powi(k as i32));
        }
        Ok(best)
    }
}

/// Largest singular value by power iteration on `MᵀM`.
pub fn operator_norm(m: &DMatrix<f64>) -> Result<f64> {
    if m.is_empty() {
        return Ok(0.0);
    }
    let scale = m.amax();
    if scale == 0.0 {
        return Ok(0.0);
    }
    if !scale.is_finite() {
        return Err(Error::Parameter("operator norm of a non-finite matrix".into()));
    }
    let a = m / scale;
    let gram = a.transpose() * &a;
    let n = gram.ncols();
    // Start from the heaviest column of the Gram matrix, nudged off any
    // invariant subspace by a fixed irrational-looking perturbation.
    let heavy = (0..n)
        .max_by(|&i, &j| gram.column(i).norm().total_cmp(&gram.column(j).norm()))
        .unwrap_or(0);
    let mut v = gram.column(heavy).into_owned();
    for (i, x) in v.iter_mut().enumerate() {
        *x += 1e-3 * ((i as f64 + 1.0) * 0.618_033_988_749_895).fract();
    }
    v.normalize_mut();
    let mut w = DVector::zeros(n);
    let mut last = 0.0;
    for _ in 0..OP_NORM_MAX_ITER {
        w.gemv(1.0, &gram, &v, 0.0);
        let rayleigh = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return Ok(0.0);
        }
        if (rayleigh - last).abs() <= OP_NORM_TOL * rayleigh.abs() {
            return Ok(scale * rayleigh.max(0.0).sqrt());
        }
        last = rayleigh;
        v.copy_from(&w);
        v /= norm;
    }
    Err(Error::NoConvergence {
        iterations: OP_NORM_MAX_ITER,
        estimate: scale * last.max(0.0).sqrt(),
    })
}

/// Spectral radius through the Gelfand sequence `‖M^{2^j}‖^{1/2^j}`, see
/// [`spectral_radius_at_depth`].
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    spectral_radius_at_depth(m, GELFAND_DEPTH)
}

/// `‖M^{2^depth}‖_F^{1/2^depth}` by repeated squaring. Each square is
/// normalised to unit Frobenius norm and the scale is carried in log space,
/// so neither overflow nor underflow can occur. The value is always an upper
/// bound on `ρ(M)`; for diagonalisable `M` the excess is `O(c^{2^-depth})`.
pub fn spectral_radius_at_depth(m: &DMatrix<f64>, depth: u32) -> f64 {
    assert!(m.is_square(), "spectral radius needs a square matrix");
    let mut a = m.clone();
    let mut log_scale = 0.0f64;
    for _ in 0..depth {
        let s = a.norm();
        if s == 0.0 {
            return 0.0;
        }
        log_scale = 2.0 * (log_scale + s.ln());
        a /= s;
        a = &a * &a;
    }
    let s = a.norm();
    if s == 0.0 {
        return 0.0;
    }
    ((s.ln() + log_scale) / 2f64.powi(depth as i32)).exp()
}

/// Simulate `n` rows after discarding `burn_in`, starting from a zero history.
/// Innovation coordinates are i.i.d. draws from `noise`, always centered.
pub fn simulate(
    coeffs: &VarCoefficients,
    noise: &NoiseSpec,
    n: usize,
    burn_in: usize,
    rng: &mut RngStream,
) -> Result<TimeSeries> {
    noise.validate()?;
    let limit = 1.0 - 1e-6;
    let radius = coeffs.companion().spectral_radius();
    if radius > limit {
        return Err(Error::Unstable { radius, limit });
    }
    if n == 0 {
        return Err(Error::Parameter("simulation length must be positive".into()));
    }
    let noise = noise.centered();
    let (d, p) = (coeffs.dim(), coeffs.order());
    let total = burn_in + n;
    // history[0] is the most recent state
    let mut history: Vec<Vec<f64>> = vec![vec![0.0; d]; p];
    let mut out = Vec::with_capacity(n * d);
    let phi: Vec<&[f64]> = coeffs.lags().iter().map(|m| m.as_slice()).collect();
    let mut next = vec![0.0; d];
    for step in 0..total {
        for v in next.iter_mut() {
            *v = noise.sample_unchecked(rng);
        }
        for (lag, h) in history.iter().enumerate() {
            let m = phi[lag];
            for (j, &hj) in h.iter().enumerate() {
                if hj == 0.0 {
                    continue;
                }
                let col = &m[j * d..(j + 1) * d];
                for (v, &c) in next.iter_mut().zip(col) {
                    *v += c * hj;
                }
            }
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                step,
                what: "VAR state overflowed".into(),
            });
        }
        history.rotate_right(1);
        history[0].copy_from_slice(&next);
        if step >= burn_in {
            out.extend_from_slice(&next);
        }
    }
    TimeSeries::new(out, d)
}

/// Recursive plug-in forecasts from the last `p` rows of `history`:
/// `Ẑ_{N+i} = Σ_j Φ̂_j Ẑ_{N+i-j}`, with observed rows standing in for
/// indices `≤ N`. Returns an `horizon × d` matrix.
pub fn forecast(theta_hat: &VarCoefficients, history: &TimeSeries, horizon: usize) -> Result<DMatrix<f64>> {
    let (d, p) = (theta_hat.dim(), theta_hat.order());
    if history.dim() != d {
        return Err(Error::Dimension(format!(
            "history has {} columns, model has {d}",
            history.dim()
        )));
    }
    if history.len() < p {
        return Err(Error::Dimension(format!(
            "forecast needs {p} history rows, got {}",
            history.len()
        )));
    }
    // window[0] is the most recent (observed or forecast) state
    let n = history.len();
    let mut window: Vec<DVector<f64>> = (0..p)
        .map(|j| DVector::from_row_slice(history.row(n - 1 - j)))
        .collect();
    let mut out = DMatrix::zeros(horizon, d);
    for i in 0..horizon {
        let mut z = DVector::zeros(d);
        for (m, w) in theta_hat.lags().iter().zip(&window) {
            z.gemv(1.0, m, w, 1.0);
        }
        out.row_mut(i).copy_from(&z.transpose());
        window.rotate_right(1);
        window[0] = z;
    }
    Ok(out)
}

/// The two five-dimensional models used in the simulation study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarPreset {
    Var1Sim,
    Var2Sim,
}

impl VarPreset {
    pub fn coefficients(self) -> VarCoefficients {
        let diags: Vec<Vec<f64>> = match self {
            VarPreset::Var1Sim => vec![vec![0.6, -0.4, 0.1, 0.5, -0.2]],
            // second lag of coordinate 2 is -0.5: with +0.5 the model has a root at -1.068
            VarPreset::Var2Sim => vec![vec![0.6, -0.6, 0.1, 0.5, -0.2], vec![-0.3, -0.5, -0.2, -0.3, 0.1]],
        };
        VarCoefficients::diagonal(&diags).expect("preset coefficients are well formed")
    }

    /// Starting point `2·I₅` for VAR(1) and `[I₅, I₅]` for VAR(2).
    pub fn default_theta0(self) -> DMatrix<f64> {
        match self {
            VarPreset::Var1Sim => DMatrix::identity(5, 5) * 2.0,
            VarPreset::Var2Sim => {
                let mut t = DMatrix::zeros(5, 10);
                t.columns_mut(0, 5).fill_with_identity();
                t.columns_mut(5, 5).fill_with_identity();
                t
            }
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            VarPreset::Var1Sim => "VAR(1)",
            VarPreset::Var2Sim => "VAR(2)",
        }
    }
}
