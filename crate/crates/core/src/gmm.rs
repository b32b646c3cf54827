//! Stacked IV moment machinery: closed-form initial estimator, Jacobian,
//! moment covariance (plain, block-diagonal, Bartlett HAR), weighting
//! matrices, the two-step GMM benchmark and the sandwich covariance.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::design::LpDesign;
use crate::error::{Error, Result};
use crate::linalg::{cholesky_jittered, condition_number, spd_inverse, symmetrize};

/// Condition number of `Z'X` above which the design is rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// How the covariance of the stacked moments is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CovMode {
    /// `(1/T) Σ_t m_t m_t'`.
    Plain,
    /// Plain with cross-horizon blocks zeroed; used only for weighting.
    BlockDiag,
    /// Bartlett-kernel long-run covariance; `None` uses `⌈1.3 √T⌉`.
    Har { bandwidth: Option<usize> },
}

impl CovMode {
    pub fn har() -> Self {
        CovMode::Har { bandwidth: None }
    }
}

impl std::str::FromStr for CovMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "plain" => Ok(CovMode::Plain),
            "block" | "block_diag" | "blockdiag" => Ok(CovMode::BlockDiag),
            "har" => Ok(CovMode::har()),
            other => Err(Error::Config(format!("unknown covariance mode `{other}` (plain|block|har)"))),
        }
    }
}

impl std::fmt::Display for CovMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CovMode::Plain => f.write_str("plain"),
            CovMode::BlockDiag => f.write_str("block"),
            CovMode::Har { bandwidth: None } => f.write_str("har"),
            CovMode::Har { bandwidth: Some(b) } => write!(f, "har({b})"),
        }
    }
}

/// Bandwidth rule `B = ⌈1.3 T^{1/2}⌉`.
pub fn har_bandwidth(t: usize) -> usize {
    (1.3 * (t as f64).sqrt()).ceil() as usize
}

/// Bartlett kernel weight `1 - b/B` for lag `b < B`, zero beyond.
pub fn bartlett_weight(lag: usize, bandwidth: usize) -> f64 {
    if lag >= bandwidth {
        0.0
    } else {
        1.0 - lag as f64 / bandwidth as f64
    }
}

fn zx_over_t(design: &LpDesign) -> DMatrix<f64> {
    design.z.transpose() * &design.x / design.t() as f64
}

/// `θ* = vec((Z'X)^{-1} Z'Y)`, stacked horizon-major.
pub fn initial_iv_estimate(design: &LpDesign) -> Result<DVector<f64>> {
    let zx = design.z.transpose() * &design.x;
    let cond = condition_number(&zx);
    if !(cond < MAX_CONDITION) {
        return Err(Error::IllConditioned(cond));
    }
    let zy = design.z.transpose() * &design.y;
    let coef = zx
        .lu()
        .solve(&zy)
        .ok_or(Error::IllConditioned(f64::INFINITY))?;
    // column-major storage of the J x (H+1) coefficient matrix is exactly vec()
    Ok(DVector::from_column_slice(coef.as_slice()))
}

fn check_len(design: &LpDesign, theta: &DVector<f64>) -> Result<()> {
    if theta.len() != design.k() {
        return Err(Error::Dimension(format!(
            "θ has length {}, expected K = {}",
            theta.len(),
            design.k()
        )));
    }
    Ok(())
}

/// Residuals `Y[:, h] - X θ_(h)` as a `T x (H+1)` matrix.
pub fn residuals(design: &LpDesign, theta: &DVector<f64>) -> Result<DMatrix<f64>> {
    check_len(design, theta)?;
    let coef = DMatrix::from_column_slice(design.j(), design.n_horizons(), theta.as_slice());
    Ok(&design.y - &design.x * coef)
}

/// Per-observation stacked moments: row `t`, block `h` is `e_(h),t z_t`.
pub fn moment_matrix(design: &LpDesign, theta: &DVector<f64>) -> Result<DMatrix<f64>> {
    let e = residuals(design, theta)?;
    let (t_len, j, nh) = (design.t(), design.j(), design.n_horizons());
    let mut m = DMatrix::zeros(t_len, j * nh);
    for h in 0..nh {
        for c in 0..j {
            let col = h * j + c;
            for t in 0..t_len {
                m[(t, col)] = e[(t, h)] * design.z[(t, c)];
            }
        }
    }
    Ok(m)
}

/// `m̄(θ)`, the column mean of [`moment_matrix`].
pub fn mean_moment(design: &LpDesign, theta: &DVector<f64>) -> Result<DVector<f64>> {
    let e = residuals(design, theta)?;
    let ze = design.z.transpose() * e / design.t() as f64;
    Ok(DVector::from_column_slice(ze.as_slice()))
}

/// Covariance of per-observation moments (rows of `moments`) for blocks of size `block`.
pub fn covariance_from_moments(moments: &DMatrix<f64>, mode: CovMode, block: usize) -> DMatrix<f64> {
    let t_len = moments.nrows();
    let tf = t_len as f64;
    let mut sigma = moments.transpose() * moments / tf;
    match mode {
        CovMode::Plain => {}
        CovMode::BlockDiag => zero_off_blocks(&mut sigma, block),
        CovMode::Har { bandwidth } => {
            let b_max = bandwidth.unwrap_or_else(|| har_bandwidth(t_len));
            for lag in 1..b_max.min(t_len) {
                let w = bartlett_weight(lag, b_max);
                let lead = moments.rows(lag, t_len - lag);
                let lagged = moments.rows(0, t_len - lag);
                // Γ_b = (1/T) Σ_{t>b} m_t m_{t-b}'
                let gamma = lead.transpose() * lagged / tf;
                sigma += (&gamma + gamma.transpose()) * w;
            }
        }
    }
    symmetrize(&mut sigma);
    sigma
}

fn zero_off_blocks(m: &mut DMatrix<f64>, block: usize) {
    let n = m.nrows();
    for r in 0..n {
        for c in 0..n {
            if r / block != c / block {
                m[(r, c)] = 0.0;
            }
        }
    }
}

/// `Σ̂(θ)` in the requested mode (uncentered moments).
pub fn moment_covariance(design: &LpDesign, theta: &DVector<f64>, mode: CovMode) -> Result<DMatrix<f64>> {
    let m = moment_matrix(design, theta)?;
    Ok(covariance_from_moments(&m, mode, design.j()))
}

/// Weighting matrix from a moment covariance.
///
/// Plain and HAR invert the full matrix; block-diagonal inverts each
/// `block x block` diagonal block separately.
pub fn weighting_matrix(sigma: &DMatrix<f64>, mode: CovMode, block: usize) -> Result<DMatrix<f64>> {
    match mode {
        CovMode::Plain | CovMode::Har { .. } => spd_inverse(sigma, "moment covariance"),
        CovMode::BlockDiag => {
            let n = sigma.nrows();
            if block == 0 || !n.is_multiple_of(block) {
                return Err(Error::Dimension(format!("block size {block} does not divide {n}")));
            }
            let mut w = DMatrix::zeros(n, n);
            for start in (0..n).step_by(block) {
                let sub = sigma.view((start, start), (block, block)).into_owned();
                let inv = spd_inverse(&sub, "within-horizon moment covariance")?;
                w.view_mut((start, start), (block, block)).copy_from(&inv);
            }
            Ok(w)
        }
    }
}

/// `Ĝ = I_{H+1} ⊗ (-Z'X / T)`.
pub fn jacobian(design: &LpDesign) -> DMatrix<f64> {
    let a = -zx_over_t(design);
    DMatrix::<f64>::identity(design.n_horizons(), design.n_horizons()).kronecker(&a)
}

/// Minimizer of `m̄(θ)' W m̄(θ)` for the linear stacked moments
/// `m̄(θ) = c + Ĝ θ`, solved as a weighted least-squares problem.
pub fn gmm_minimizer(design: &LpDesign, weight: &DMatrix<f64>) -> Result<DVector<f64>> {
    let k = design.k();
    if weight.nrows() != k || weight.ncols() != k {
        return Err(Error::Dimension(format!("W must be {k}x{k}")));
    }
    let g = jacobian(design);
    let zy = design.z.transpose() * &design.y / design.t() as f64;
    let c = DVector::from_column_slice(zy.as_slice());
    let l = cholesky_jittered(weight, "weighting matrix")?.factor.l();
    let a = l.transpose() * g;
    let b = -(l.transpose() * c);
    a.qr().solve(&b).ok_or(Error::IllConditioned(f64::INFINITY))
}

#[derive(Debug, Clone)]
pub struct TwoStepGmm {
    pub theta: DVector<f64>,
    pub theta_stage1: DVector<f64>,
    /// Second-stage weighting matrix `W₂`.
    pub weight: DMatrix<f64>,
}

/// System-wide two-step GMM: identity weighting, then the inverse moment
/// covariance evaluated at the first-stage estimate.
pub fn two_step_gmm(design: &LpDesign, mode: CovMode) -> Result<TwoStepGmm> {
    let zx = design.z.transpose() * &design.x;
    let cond = condition_number(&zx);
    if !(cond < MAX_CONDITION) {
        return Err(Error::IllConditioned(cond));
    }
    let k = design.k();
    let theta_stage1 = gmm_minimizer(design, &DMatrix::identity(k, k))?;
    let sigma = moment_covariance(design, &theta_stage1, mode)?;
    let weight = weighting_matrix(&sigma, mode, design.j())?;
    let theta = gmm_minimizer(design, &weight)?;
    Ok(TwoStepGmm {
        theta,
        theta_stage1,
        weight,
    })
}

/// `V̂ = (1/T)(Ĝ'WĜ)^{-1} Ĝ'WΣ̂WĜ (Ĝ'WĜ)^{-1}`, symmetrized.
pub fn sandwich_covariance(
    g: &DMatrix<f64>,
    weight: &DMatrix<f64>,
    sigma: &DMatrix<f64>,
    t: usize,
) -> Result<DMatrix<f64>> {
    let gw = g.transpose() * weight;
    let mut bread = &gw * g;
    symmetrize(&mut bread);
    let bread_inv = spd_inverse(&bread, "sandwich bread")?;
    let meat = &gw * sigma * gw.transpose();
    let mut v = &bread_inv * meat * &bread_inv / t as f64;
    symmetrize(&mut v);
    Ok(v)
}

/// Stacked moment system evaluated at the initial estimator, with the
/// weighting matrix held fixed for sampling.
#[derive(Debug, Clone)]
pub struct MomentModel {
    pub theta_star: DVector<f64>,
    pub g_hat: DMatrix<f64>,
    /// Covariance in `cov_mode` at `θ*`, the basis of `W`.
    pub sigma_hat: DMatrix<f64>,
    pub weight: DMatrix<f64>,
    pub cov_mode: CovMode,
    /// `Υ = T Ĝ'WĜ`.
    pub upsilon: DMatrix<f64>,
    pub t: usize,
    pub j: usize,
    pub n_horizons: usize,
}

impl MomentModel {
    pub fn new(design: &LpDesign, cov_mode: CovMode) -> Result<Self> {
        let theta_star = initial_iv_estimate(design)?;
        let sigma_hat = moment_covariance(design, &theta_star, cov_mode)?;
        let weight = weighting_matrix(&sigma_hat, cov_mode, design.j())?;
        let g_hat = jacobian(design);
        let mut upsilon = g_hat.transpose() * &weight * &g_hat * design.t() as f64;
        symmetrize(&mut upsilon);
        Ok(MomentModel {
            theta_star,
            g_hat,
            sigma_hat,
            weight,
            cov_mode,
            upsilon,
            t: design.t(),
            j: design.j(),
            n_horizons: design.n_horizons(),
        })
    }

    pub fn k(&self) -> usize {
        self.j * self.n_horizons
    }

    /// Sandwich covariance around `theta_hat`.
    ///
    /// The meat always uses the full stacked moment vector: block-diagonal
    /// mode only restricts the weighting matrix.
    pub fn sandwich_at(&self, design: &LpDesign, theta_hat: &DVector<f64>) -> Result<DMatrix<f64>> {
        let meat_mode = match self.cov_mode {
            CovMode::BlockDiag => CovMode::Plain,
            other => other,
        };
        let sigma = moment_covariance(design, theta_hat, meat_mode)?;
        sandwich_covariance(&self.g_hat, &self.weight, &sigma, self.t)
    }
}
