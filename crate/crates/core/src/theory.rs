//! Block partitions, tuning formulas, rate and mixing bounds, the scalar toy
//! model and Monte Carlo checks of the exponential-moment inequalities.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::losses::psi_alpha;
use crate::rng::RngStream;
use crate::tail_dist::NoiseSpec;

/// Big blocks `J_j`, small blocks `I_j` and the reserved tail, as 1-based
/// half-open index ranges over `{1, …, n}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockPartition {
    pub n: usize,
    pub big: Vec<Range<usize>>,
    pub small: Vec<Range<usize>>,
    pub tail: Range<usize>,
}

impl BlockPartition {
    pub fn k(&self) -> usize {
        self.big.len()
    }
}

pub fn block_partition(n: usize, big: usize, small: usize) -> Result<BlockPartition> {
    if small < 1 || small > big || big > n {
        return Err(Error::Parameter(format!(
            "block sizes need 1 <= m <= M <= n, got M={big}, m={small}, n={n}"
        )));
    }
    let width = big + small;
    let k = n / width;
    if k == 0 {
        return Err(Error::DegeneratePartition { n, block: width });
    }
    let big_blocks = (0..k).map(|j| j * width + 1..j * width + big + 1).collect();
    let small_blocks = (0..k).map(|j| j * width + big + 1..(j + 1) * width + 1).collect();
    Ok(BlockPartition {
        n,
        big: big_blocks,
        small: small_blocks,
        tail: k * width + 1..n + 1,
    })
}

/// `M = m = ⌊(2/β) log n⌋` and the resulting number of block pairs.
pub fn theorem_blocks(n: usize, beta: f64) -> Result<(usize, usize, usize)> {
    if n < 3 || !(beta > 0.0) {
        return Err(Error::Parameter(format!(
            "need n >= 3 and beta > 0, got n={n}, beta={beta}"
        )));
    }
    // absorbs rounding when the product is an exact integer
    let raw = 2.0 / beta * (n as f64).ln();
    let size = (raw * (1.0 + 1e-12)).floor();
    if size < 1.0 {
        return Err(Error::Parameter(format!("(2/beta) log n = {raw} gives empty blocks")));
    }
    let size = size as usize;
    let part = block_partition(n, size, size)?;
    Ok((size, size, part.k()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoryParams {
    pub n: usize,
    pub beta: f64,
    pub b: f64,
    pub d1: usize,
    pub d2: usize,
    pub kappa: usize,
    pub r: f64,
    pub alpha: f64,
    pub eps: f64,
}

impl TheoryParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [("beta", self.beta), ("B", self.b), ("R", self.r)];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
        }
        if self.n < 3 || self.d1 == 0 || self.d2 == 0 || self.kappa == 0 {
            return Err(Error::Parameter("n >= 3 and d1, d2, kappa >= 1 are required".into()));
        }
        if !(self.alpha > 1.0 && self.alpha <= 2.0) {
            return Err(Error::Parameter(format!(
                "alpha must lie in (1, 2], got {}",
                self.alpha
            )));
        }
        if !(self.eps > 0.0 && self.eps < 0.5) {
            return Err(Error::Parameter(format!("eps must lie in (0, 1/2), got {}", self.eps)));
        }
        Ok(())
    }

    fn complexity(&self) -> f64 {
        ((self.d1 + self.d2) * self.kappa) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SideConditions {
    pub delta_below_one: bool,
    pub dimension_ratio_below_one: bool,
    pub mixing_condition: bool,
}

impl SideConditions {
    pub fn all_hold(&self) -> bool {
        self.delta_below_one && self.dimension_ratio_below_one && self.mixing_condition
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tuning {
    pub delta: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub conditions: SideConditions,
}

/// `δ = 12 log n/(nβ)`, `λ = (2δ(log(16/ε²) + (d₁+d₂)κ log(6R/δ)))^{1/α}`,
/// `γ = log n/n`, together with the status of the sample-size conditions.
pub fn tuning_params(p: &TheoryParams) -> Result<Tuning> {
    p.validate()?;
    let n = p.n as f64;
    let log_n = n.ln();
    let delta = 12.0 * log_n / (n * p.beta);
    let lambda =
        (2.0 * delta * ((16.0 / (p.eps * p.eps)).ln() + p.complexity() * (6.0 * p.r / delta).ln())).powf(1.0 / p.alpha);
    let gamma = log_n / n;

    let denom = 2.0 * log_n - p.beta;
    let mixing_condition = denom > 0.0 && {
        let lhs = (p.beta / (n * denom)).ln();
        let rhs = (p.eps / (2.0 * p.b)).ln() + p.complexity() * (delta / (6.0 * p.r)).ln();
        lhs <= rhs
    };
    Ok(Tuning {
        delta,
        lambda,
        gamma,
        conditions: SideConditions {
            delta_below_one: delta < 1.0,
            dimension_ratio_below_one: p.complexity() * log_n / n < 1.0,
            mixing_condition,
        },
    })
}

/// Excess-risk rate up to its universal constant:
/// `((log n/(βn))(|log ε| + (d₁+d₂)κ log n))^{(α−1)/α}`.
pub fn excess_risk_rate(p: &TheoryParams) -> Result<f64> {
    p.validate()?;
    let n = p.n as f64;
    let inner = n.ln() / (p.beta * n) * (p.eps.ln().abs() + p.complexity() * n.ln());
    Ok(inner.powf((p.alpha - 1.0) / p.alpha))
}

/// Log of the covering bound `(6R/δ)^{(d₁+d₂)κ}`.
pub fn covering_log_bound(d1: usize, d2: usize, kappa: usize, r: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0) || !(r > 0.0) {
        return Err(Error::Parameter(format!(
            "need delta > 0 and R > 0, got delta={delta}, R={r}"
        )));
    }
    if delta > 6.0 * r {
        return Err(Error::Parameter(format!("delta = {delta} exceeds 6R = {}", 6.0 * r)));
    }
    Ok(((d1 + d2) * kappa) as f64 * (6.0 * r / delta).ln())
}

/// Mixing rate `|log ρ|/2` of a stable VAR with companion radius `ρ`.
pub fn var_mixing_rate(rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Parameter(format!("rho must lie in (0, 1), got {rho}")));
    }
    Ok(rho.ln().abs() / 2.0)
}

/// `K C^a / ((1−ρ)^a (1−ρ^a)) · exp(−n a log(1/ρ))` with `a = α/(1+α)`.
pub fn var_beta_bound(k: f64, c_op: f64, rho: f64, alpha: f64, n: usize) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Parameter(format!("rho must lie in (0, 1), got {rho}")));
    }
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(Error::Parameter(format!("alpha must lie in (1, 2], got {alpha}")));
    }
    if !(k > 0.0) || !(c_op > 0.0) {
        return Err(Error::Parameter(format!(
            "K and C_op must be positive, got {k}, {c_op}"
        )));
    }
    let a = alpha / (1.0 + alpha);
    let prefactor = k * c_op.powf(a) / ((1.0 - rho).powf(a) * (1.0 - rho.powf(a)));
    Ok(prefactor * (-(n as f64) * a * (1.0 / rho).ln()).exp())
}

/// Population ℓ₁ risk of the scalar toy model with atom mass `rho_n` at zero
/// and symmetric Pareto(`mu`) tails.
pub fn toy_population_risk(theta: f64, mu: f64, rho_n: f64) -> f64 {
    let t = theta.abs();
    if t < 1.0 {
        mu / (mu - 1.0) * (1.0 - rho_n) + rho_n * t
    } else {
        (1.0 - rho_n) * (t + t.powf(1.0 - mu) / (mu - 1.0)) + rho_n * t
    }
}

/// Lower bound on the toy-model failure probability of the sample median:
/// `2 P(Bin(2m+1, (1+ρ)/2) ≤ m)` with `ρ = 1/√n`.
pub fn toy_lad_failure_prob(n: usize) -> Result<f64> {
    if n.is_multiple_of(2) {
        return Err(Error::Parameter(format!("sample size must be odd, got {n}")));
    }
    let m = n / 2;
    let rho = 1.0 / (n as f64).sqrt();
    let p = (1.0 + rho) / 2.0;
    if p >= 1.0 {
        return Ok(0.0);
    }
    Ok(2.0 * binomial_cdf(n, p, m))
}

/// `P(Bin(n, p) ≤ m)` summed in log space.
fn binomial_cdf(n: usize, p: f64, m: usize) -> f64 {
    let log_odds = p.ln() - (1.0 - p).ln();
    let mut log_term = n as f64 * (1.0 - p).ln();
    let mut log_total = log_term;
    for j in 0..m {
        log_term += ((n - j) as f64).ln() - ((j + 1) as f64).ln() + log_odds;
        let (hi, lo) = if log_term > log_total {
            (log_term, log_total)
        } else {
            (log_total, log_term)
        };
        log_total = hi + (lo - hi).exp().ln_1p();
    }
    log_total.exp().min(1.0)
}

/// Fraction of `trials` toy samples of size `n` whose median satisfies `|θ̄| ≥ 1`.
pub fn toy_lad_failure_mc(n: usize, mu: f64, trials: usize, rng: &mut RngStream) -> Result<f64> {
    if n.is_multiple_of(2) || trials == 0 {
        return Err(Error::Parameter(format!(
            "need odd n and trials >= 1, got n={n}, trials={trials}"
        )));
    }
    let law = NoiseSpec::toy_sparse(mu, 1.0 / (n as f64).sqrt());
    law.validate()?;
    let mut buf = vec![0.0; n];
    let mut hits = 0usize;
    for _ in 0..trials {
        for v in buf.iter_mut() {
            *v = law.sample_unchecked(rng);
        }
        let (_, median, _) = buf.select_nth_unstable_by(n / 2, f64::total_cmp);
        if median.abs() >= 1.0 {
            hits += 1;
        }
    }
    Ok(hits as f64 / trials as f64)
}

/// Source of i.i.d. pairs `(X, Y)` for [`catoni_mgf_check`].
#[derive(Debug, Clone, PartialEq)]
pub enum PairLaw {
    /// The same pair every draw.
    Point { x: Vec<f64>, y: Vec<f64> },
    /// `X` with i.i.d. coordinates from `x_law`, `Y = θ_true X + ε` with i.i.d.
    /// coordinates of `ε` from `noise`.
    Linear {
        theta_true: DMatrix<f64>,
        x_law: NoiseSpec,
        noise: NoiseSpec,
    },
}

impl PairLaw {
    fn d_in(&self) -> usize {
        match self {
            PairLaw::Point { x, .. } => x.len(),
            PairLaw::Linear { theta_true, .. } => theta_true.ncols(),
        }
    }

    fn d_out(&self) -> usize {
        match self {
            PairLaw::Point { y, .. } => y.len(),
            PairLaw::Linear { theta_true, .. } => theta_true.nrows(),
        }
    }

    fn draw(&self, rng: &mut RngStream) -> (DVector<f64>, DVector<f64>) {
        match self {
            PairLaw::Point { x, y } => (DVector::from_row_slice(x), DVector::from_row_slice(y)),
            PairLaw::Linear {
                theta_true,
                x_law,
                noise,
            } => {
                let x = DVector::from_fn(theta_true.ncols(), |_, _| x_law.sample_unchecked(rng));
                let eps = DVector::from_fn(theta_true.nrows(), |_, _| noise.sample_unchecked(rng));
                let y = theta_true * &x + eps;
                (x, y)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MgfReport {
    pub lhs_upper: f64,
    pub rhs_upper: f64,
    pub se_upper: f64,
    pub lhs_lower: f64,
    pub rhs_lower: f64,
    pub se_lower: f64,
    /// Moment estimates `E|Y−θX|`, `E|Y−θX|^α`, `E|X|`, `E|X|^α`.
    pub moments: [f64; 4],
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MgfSettings {
    pub lambda: f64,
    pub alpha: f64,
    /// Shift in the lower inequality.
    pub delta: f64,
    /// Number of pairs averaged inside each exponential.
    pub block_size: usize,
    pub trials: usize,
}

/// Monte Carlo check of the upper and lower exponential-moment inequalities
/// for ψ_α at a fixed `theta`. The moments on the right-hand sides are
/// estimated from the same draws; the check passes when each left side is at
/// most `rhs + 5·se`.
pub fn catoni_mgf_check(
    theta: &DMatrix<f64>,
    law: &PairLaw,
    s: &MgfSettings,
    rng: &mut RngStream,
) -> Result<MgfReport> {
    if s.trials < 10_000 || s.block_size == 0 {
        return Err(Error::Parameter(format!(
            "need at least 10^4 trials and a nonempty block, got {} and {}",
            s.trials, s.block_size
        )));
    }
    if !(s.lambda > 0.0) || !(s.delta >= 0.0) || !(s.alpha > 1.0 && s.alpha <= 2.0) {
        return Err(Error::Parameter(format!(
            "need lambda > 0, delta >= 0, alpha in (1, 2], got {}, {}, {}",
            s.lambda, s.delta, s.alpha
        )));
    }
    if theta.nrows() != law.d_out() || theta.ncols() != law.d_in() {
        return Err(Error::Dimension(format!(
            "theta is {}x{}, pairs are {}x{}",
            theta.nrows(),
            theta.ncols(),
            law.d_out(),
            law.d_in()
        )));
    }
    if let PairLaw::Linear { x_law, noise, .. } = law {
        x_law.validate()?;
        noise.validate()?;
    }

    let (lam, a) = (s.lambda, s.alpha);
    let mut up = Welford::default();
    let mut low = Welford::default();
    let mut moments = [0.0f64; 4];
    let mut count = 0usize;
    for _ in 0..s.trials {
        let (mut up_sum, mut low_sum) = (0.0, 0.0);
        for _ in 0..s.block_size {
            let (x, y) = law.draw(rng);
            let r = (y - theta * &x).norm();
            let xn = x.norm();
            up_sum += psi_alpha(lam * r, a);
            low_sum += psi_alpha(lam * r - lam * s.delta * xn, a);
            moments[0] += r;
            moments[1] += r.powf(a);
            moments[2] += xn;
            moments[3] += xn.powf(a);
            count += 1;
        }
        let bs = s.block_size as f64;
        up.push((up_sum / bs).exp());
        low.push((-low_sum / bs).exp());
    }
    for m in moments.iter_mut() {
        *m /= count as f64;
    }
    let [r1, ra, x1, xa] = moments;
    if !(up.mean.is_finite() && low.mean.is_finite() && moments.iter().all(|m| m.is_finite())) {
        return Err(Error::NonFinite {
            step: s.trials,
            what: "Monte Carlo accumulator".into(),
        });
    }
    let rhs_upper = (lam * r1 + a * lam.powf(a) * ra).exp();
    let rhs_lower = (lam * (-r1 + s.delta * x1 + (2.0 * lam).powf(a - 1.0) / a * (ra + s.delta.powf(a) * xa))).exp();
    let (se_upper, se_lower) = (up.std_error(), low.std_error());
    let pass = up.mean <= rhs_upper + 5.0 * se_upper && low.mean <= rhs_lower + 5.0 * se_lower;
    Ok(MgfReport {
        lhs_upper: up.mean,
        rhs_upper,
        se_upper,
        lhs_lower: low.mean,
        rhs_lower,
        se_lower,
        moments,
        pass,
    })
}

#[derive(Default)]
struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, v: f64) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
    }

    fn std_error(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
    }
}
