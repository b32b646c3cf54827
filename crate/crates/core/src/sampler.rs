//! Gibbs sampler for the GMM quasi-posterior.
//!
//! Conditional on the path scales, the coefficients are Gaussian with
//! precision `P = Υ + Π` and mean `P^{-1} Υ θ*`. Draws are produced from a
//! Cholesky factor of `P` without forming its inverse. Each path scale
//! uses the inverse-gamma mixture representation of the half-Cauchy prior,
//! with an auxiliary variable `ν_j`.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gmm::MomentModel;
use crate::linalg::cholesky_jittered;
use crate::prior::{smoothing_precision, PriorConfig};
use crate::rng::{stream_rng, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PriorMode {
    /// `p(θ) ∝ 1`: the quasi-posterior is centered at `θ*`.
    Flat,
    /// Roughness-penalty prior with half-Cauchy path scales.
    Roughness(PriorConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcConfig {
    /// Total iterations including burn-in.
    pub n_draws: usize,
    pub n_burn: usize,
    pub thinning: usize,
    pub seed: u64,
    /// Stream id; distinct chains under one seed use distinct ids.
    pub chain_id: u64,
    /// Starting value for every `τ_j` (and `ν_j = 1`).
    pub init_tau: f64,
    /// Keep every retained draw; otherwise only running means are stored.
    pub keep_draws: bool,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            n_draws: 25_000,
            n_burn: 5_000,
            thinning: 1,
            seed: 1,
            chain_id: 0,
            init_tau: 1.0,
            keep_draws: false,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_draws <= self.n_burn {
            return Err(Error::InvalidParameter(format!(
                "n_draws ({}) must exceed n_burn ({})",
                self.n_draws, self.n_burn
            )));
        }
        if self.thinning == 0 {
            return Err(Error::InvalidParameter("thinning must be at least 1".into()));
        }
        if !(self.init_tau > 0.0) {
            return Err(Error::InvalidParameter("initial tau must be positive".into()));
        }
        Ok(())
    }

    pub fn n_retained(&self) -> usize {
        (self.n_draws - self.n_burn) / self.thinning
    }
}

/// Output of [`run_gibbs`].
#[derive(Debug, Clone)]
pub struct Chain {
    /// Retained `θ` draws, one per row (when `keep_draws`).
    pub theta_draws: Option<DMatrix<f64>>,
    /// Retained `τ_j` draws (scales, not squares), roughness mode only.
    pub tau_draws: Option<DMatrix<f64>>,
    pub theta_sum: DVector<f64>,
    pub tau_sum: Option<DVector<f64>>,
    pub n_retained: usize,
    /// Largest diagonal jitter needed to factor the precision.
    pub max_jitter: f64,
    pub seed: u64,
    pub chain_id: u64,
}

impl Chain {
    pub fn k(&self) -> usize {
        self.theta_sum.len()
    }

    pub fn tau_mean(&self) -> Option<DVector<f64>> {
        self.tau_sum.as_ref().map(|s| s / self.n_retained.max(1) as f64)
    }
}

/// Solve `L x = b` in place for lower-triangular `L`.
fn forward(l: &DMatrix<f64>, b: &mut DVector<f64>) {
    let n = b.len();
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * b[k];
        }
        b[i] = s / l[(i, i)];
    }
}

/// Solve `L' x = b` in place for lower-triangular `L`.
fn backward(l: &DMatrix<f64>, b: &mut DVector<f64>) {
    let n = b.len();
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * b[k];
        }
        b[i] = s / l[(i, i)];
    }
}

/// Factor of the conditional precision together with its mean.
struct Conditional {
    l: DMatrix<f64>,
    mean: DVector<f64>,
    jitter: f64,
}

fn conditional(precision: &DMatrix<f64>, linear: &DVector<f64>) -> Result<Conditional> {
    let chol = cholesky_jittered(precision, "conditional precision Υ + Π")?;
    let l = chol.factor.l();
    let mut mean = linear.clone();
    forward(&l, &mut mean);
    backward(&l, &mut mean);
    Ok(Conditional {
        l,
        mean,
        jitter: chol.jitter,
    })
}

fn draw_from<R: Rng + ?Sized>(c: &Conditional, rng: &mut R) -> DVector<f64> {
    let mut v = DVector::from_fn(c.mean.len(), |_, _| StandardNormal.sample(rng));
    backward(&c.l, &mut v);
    v + &c.mean
}

/// One draw from `N(ΩΥθ*, Ω)` with `Ω = (Υ + Π)^{-1}`.
pub fn draw_coefficients<R: Rng + ?Sized>(
    upsilon: &DMatrix<f64>,
    pi: &DMatrix<f64>,
    theta_star: &DVector<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let precision = upsilon + pi;
    let c = conditional(&precision, &(upsilon * theta_star))?;
    Ok(draw_from(&c, rng))
}

/// Inverse-gamma draw with shape `a` and rate `b`.
pub fn inverse_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    let g = Gamma::new(shape, 1.0).expect("positive gamma shape");
    rate / g.sample(rng)
}

/// `τ_j² | θ_j, ν_j ~ IG((n+1)/2, 1/ν_j + θ_j'Qθ_j / 2)` for a path of length `n`
/// (`n = H + 1` gives shape `(H+2)/2`).
pub fn update_tau<R: Rng + ?Sized>(path: &DVector<f64>, q: &DMatrix<f64>, nu: f64, rng: &mut R) -> f64 {
    let quad = if path.is_empty() {
        0.0
    } else {
        (path.transpose() * q * path)[(0, 0)]
    };
    let shape = (path.len() as f64 + 1.0) / 2.0;
    inverse_gamma(shape, 1.0 / nu + 0.5 * quad, rng)
}

/// `ν_j | τ_j² ~ IG(1, 1/κ² + 1/τ_j²)`.
pub fn update_nu<R: Rng + ?Sized>(tau_sq: f64, kappa: f64, rng: &mut R) -> f64 {
    inverse_gamma(1.0, 1.0 / (kappa * kappa) + 1.0 / tau_sq, rng)
}

/// Run the blocked Gibbs sampler. Each sweep draws `θ | τ`, then every
/// `τ_j² | θ_j, ν_j`, then every `ν_j | τ_j²`.
pub fn run_gibbs(model: &MomentModel, prior: &PriorMode, cfg: &McmcConfig) -> Result<Chain> {
    cfg.validate()?;
    let k = model.k();
    let j = model.j;
    let nh = model.n_horizons;
    let mut rng: StreamRng = stream_rng(cfg.seed, cfg.chain_id);
    let linear = &model.upsilon * &model.theta_star;
    let n_keep = cfg.n_retained();

    let mut theta_draws = cfg.keep_draws.then(|| DMatrix::zeros(n_keep, k));
    let mut theta_sum = DVector::zeros(k);
    let mut max_jitter = 0.0f64;
    let mut kept = 0usize;
    let retain = |iter: usize| iter >= cfg.n_burn && (iter - cfg.n_burn + 1).is_multiple_of(cfg.thinning);

    match prior {
        PriorMode::Flat => {
            let c = conditional(&model.upsilon, &linear)?;
            max_jitter = c.jitter;
            for iter in 0..cfg.n_draws {
                let theta = draw_from(&c, &mut rng);
                if retain(iter) && kept < n_keep {
                    theta_sum += &theta;
                    if let Some(d) = theta_draws.as_mut() {
                        d.row_mut(kept).copy_from(&theta.transpose());
                    }
                    kept += 1;
                }
            }
            Ok(Chain {
                theta_draws,
                tau_draws: None,
                theta_sum,
                tau_sum: None,
                n_retained: kept,
                max_jitter,
                seed: cfg.seed,
                chain_id: cfg.chain_id,
            })
        }
        PriorMode::Roughness(pc) => {
            pc.validate()?;
            if nh < 2 {
                return Err(Error::InvalidParameter("roughness prior needs at least two horizons".into()));
            }
            let q = smoothing_precision(nh - 1, pc.rho)?;
            let mut tau_sq = vec![cfg.init_tau * cfg.init_tau; j];
            let mut nu = vec![1.0; j];
            let mut tau_draws = cfg.keep_draws.then(|| DMatrix::zeros(n_keep, j));
            let mut tau_sum = DVector::zeros(j);
            let mut precision = model.upsilon.clone();
            let mut path = DVector::zeros(nh);
            for iter in 0..cfg.n_draws {
                // P = Υ + Q ⊗ diag(τ^{-2}); only the tridiagonal blocks of Π are non-zero
                precision.copy_from(&model.upsilon);
                for h in 0..nh {
                    for hp in h.saturating_sub(1)..(h + 2).min(nh) {
                        let qv = q[(h, hp)];
                        for c in 0..j {
                            precision[(h * j + c, hp * j + c)] += qv / tau_sq[c];
                        }
                    }
                }
                let cond = conditional(&precision, &linear)?;
                max_jitter = max_jitter.max(cond.jitter);
                let theta = draw_from(&cond, &mut rng);
                for c in 0..j {
                    for h in 0..nh {
                        path[h] = theta[h * j + c];
                    }
                    tau_sq[c] = update_tau(&path, &q, nu[c], &mut rng);
                }
                for c in 0..j {
                    nu[c] = update_nu(tau_sq[c], pc.kappa, &mut rng);
                }
                if retain(iter) && kept < n_keep {
                    theta_sum += &theta;
                    for c in 0..j {
                        let tau = tau_sq[c].sqrt();
                        tau_sum[c] += tau;
                        if let Some(d) = tau_draws.as_mut() {
                            d[(kept, c)] = tau;
                        }
                    }
                    if let Some(d) = theta_draws.as_mut() {
                        d.row_mut(kept).copy_from(&theta.transpose());
                    }
                    kept += 1;
                }
            }
            Ok(Chain {
                theta_draws,
                tau_draws,
                theta_sum,
                tau_sum: Some(tau_sum),
                n_retained: kept,
                max_jitter,
                seed: cfg.seed,
                chain_id: cfg.chain_id,
            })
        }
    }
}

/// Quasi-posterior mean: the average of the retained draws.
pub fn posterior_mean(chain: &Chain) -> Result<DVector<f64>> {
    if chain.n_retained == 0 {
        return Err(Error::EmptyChain);
    }
    Ok(&chain.theta_sum / chain.n_retained as f64)
}

/// Write retained draws in long format: `iteration,coordinate,value` for θ
/// and `iteration,path,value` for τ. Requires `keep_draws`.
pub fn write_chain_csv(chain: &Chain, theta_path: &Path, tau_path: Option<&Path>) -> Result<()> {
    let draws = chain
        .theta_draws
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("chain was run without keep_draws".into()))?;
    let mut out = std::io::BufWriter::new(std::fs::File::create(theta_path).map_err(|e| Error::io(theta_path, e))?);
    let io = |e| Error::io(theta_path, e);
    writeln!(out, "iteration,coordinate,value").map_err(io)?;
    for (i, row) in draws.row_iter().enumerate() {
        for (k, v) in row.iter().enumerate() {
            writeln!(out, "{i},{k},{v}").map_err(io)?;
        }
    }
    out.flush().map_err(io)?;
    if let (Some(p), Some(taus)) = (tau_path, chain.tau_draws.as_ref()) {
        let mut out = std::io::BufWriter::new(std::fs::File::create(p).map_err(|e| Error::io(p, e))?);
        let io = |e| Error::io(p, e);
        writeln!(out, "iteration,path,value").map_err(io)?;
        for (i, row) in taus.row_iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                writeln!(out, "{i},{k},{v}").map_err(io)?;
            }
        }
        out.flush().map_err(io)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmm::{tests::random_design, CovMode};
    use crate::prior::{roughness, stacked_prior_precision};

    #[test]
    fn target_mean_scalar_algebra() {
        let k = 4;
        let i = DMatrix::<f64>::identity(k, k);
        let theta_star = DVector::from_element(k, 2.0);
        let c = conditional(&(&i + &i), &(&i * &theta_star)).unwrap();
        assert!((c.mean - DVector::from_element(k, 1.0)).amax() < 1e-14);
    }

    #[test]
    fn coefficient_draws_match_dense_oracle() {
        let mut rng = stream_rng(11, 0);
        let k = 6;
        let a = DMatrix::<f64>::from_fn(k, k, |_, _| StandardNormal.sample(&mut rng));
        let upsilon = &a * a.transpose() + DMatrix::<f64>::identity(k, k);
        let q = smoothing_precision(2, 4.0).unwrap();
        let pi = stacked_prior_precision(&q, &[0.7, 1.5]).unwrap();
        let theta_star = DVector::from_fn(k, |i, _| i as f64 - 2.0);
        let omega = (&upsilon + &pi).try_inverse().unwrap();
        let mean = &omega * &upsilon * &theta_star;
        let n = 40_000;
        let mut sum = DVector::zeros(k);
        let mut draws = Vec::with_capacity(n);
        for _ in 0..n {
            let d = draw_coefficients(&upsilon, &pi, &theta_star, &mut rng).unwrap();
            sum += &d;
            draws.push(d);
        }
        let m = &sum / n as f64;
        let mut cov = DMatrix::zeros(k, k);
        for d in &draws {
            let e = d - &m;
            cov += &e * e.transpose();
        }
        cov /= (n - 1) as f64;
        assert!((&cov - &omega).norm() / omega.norm() < 0.05);
        for i in 0..k {
            let se = (omega[(i, i)] / n as f64).sqrt();
            assert!((m[i] - mean[i]).abs() < 4.0 * se);
        }
    }

    #[test]
    fn tau_conditional_mean() {
        // θ = 0, ν = 1, H = 7: IG(4.5, 1) has mean 1/3.5
        let q = smoothing_precision(7, 4.0).unwrap();
        let path = DVector::zeros(8);
        let mut rng = stream_rng(5, 0);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| update_tau(&path, &q, 1.0, &mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean - 1.0 / 3.5).abs() < 3.0 * se, "mean {mean}");
        assert!(draws.iter().all(|d| *d > 0.0));

        // larger quadratic form -> stochastically larger τ²
        let rough = DVector::from_fn(8, |h, _| if h % 2 == 0 { 1.0 } else { -1.0 });
        let mut r1 = stream_rng(6, 0);
        let mut r2 = stream_rng(6, 0);
        for _ in 0..100 {
            assert!(update_tau(&rough, &q, 1.0, &mut r1) > update_tau(&path, &q, 1.0, &mut r2));
        }
    }

    #[test]
    fn prior_only_mixture_is_half_cauchy() {
        // with no coefficients in the τ update the pair (τ², ν) targets the
        // mixture whose τ marginal is half-Cauchy(0, κ)
        let kappa = 2.0;
        let q = smoothing_precision(1, 4.0).unwrap();
        let empty = DVector::zeros(0);
        let mut rng = stream_rng(12, 0);
        let mut nu = 1.0;
        let n = 200_000;
        let mut taus: Vec<f64> = (0..n)
            .map(|_| {
                let t2 = update_tau(&empty, &q, nu, &mut rng);
                nu = update_nu(t2, kappa, &mut rng);
                t2.sqrt()
            })
            .collect();
        taus.sort_by(f64::total_cmp);
        for p in [0.25, 0.5, 0.75] {
            let q_hat = taus[(p * n as f64) as usize];
            let q_true = kappa * (std::f64::consts::FRAC_PI_2 * p).tan();
            assert!((q_hat / q_true - 1.0).abs() < 0.02, "p={p}: {q_hat} vs {q_true}");
        }
    }

    #[test]
    fn nu_conditional_limits() {
        // κ = 1, τ² = 1 -> IG(1, 2); a common-random-number comparison with κ → ∞
        let mut a = stream_rng(8, 0);
        let mut b = stream_rng(8, 0);
        let mut c = stream_rng(8, 0);
        for _ in 0..50 {
            let x = update_nu(1.0, 1.0, &mut a);
            let y = inverse_gamma(1.0, 2.0, &mut b);
            assert_eq!(x, y);
            let big = update_nu(1.0, 1e12, &mut c);
            assert!((big - x / 2.0).abs() < 1e-9 * x);
        }
    }

    #[test]
    fn flat_chain_is_centered_and_deterministic() {
        let d = random_design(21, 300, 3, 3);
        let model = MomentModel::new(&d, CovMode::Plain).unwrap();
        let cfg = McmcConfig {
            n_draws: 21_000,
            n_burn: 1_000,
            seed: 42,
            keep_draws: true,
            ..Default::default()
        };
        let chain = run_gibbs(&model, &PriorMode::Flat, &cfg).unwrap();
        assert_eq!(chain.n_retained, 20_000);
        let mean = posterior_mean(&chain).unwrap();
        let omega = model.upsilon.clone().try_inverse().unwrap();
        for i in 0..model.k() {
            let sd = omega[(i, i)].sqrt();
            assert!((mean[i] - model.theta_star[i]).abs() < 0.03 * sd);
        }
        let again = run_gibbs(&model, &PriorMode::Flat, &cfg).unwrap();
        assert_eq!(again.theta_draws, chain.theta_draws);
    }

    #[test]
    fn roughness_chain_properties() {
        let d = random_design(22, 150, 3, 6);
        let model = MomentModel::new(&d, CovMode::Plain).unwrap();
        let prior = PriorMode::Roughness(PriorConfig::default());
        let cfg = McmcConfig {
            n_draws: 3_000,
            n_burn: 500,
            thinning: 5,
            seed: 9,
            keep_draws: true,
            ..Default::default()
        };
        let chain = run_gibbs(&model, &prior, &cfg).unwrap();
        assert_eq!(chain.n_retained, 500);
        let taus = chain.tau_draws.as_ref().unwrap();
        assert!(taus.iter().all(|t| *t > 0.0));
        let mean = posterior_mean(&chain).unwrap();
        assert!(roughness(&mean, 3).unwrap() <= roughness(&model.theta_star, 3).unwrap());
        let again = run_gibbs(&model, &prior, &cfg).unwrap();
        assert_eq!(again.theta_draws, chain.theta_draws);
        assert_eq!(again.tau_draws, chain.tau_draws);
    }

    #[test]
    fn posterior_mean_of_small_chains() {
        let mk = |rows: &[&[f64]]| {
            let k = rows[0].len();
            let mut sum = DVector::zeros(k);
            for r in rows {
                sum += DVector::from_row_slice(r);
            }
            Chain {
                theta_draws: None,
                tau_draws: None,
                theta_sum: sum,
                tau_sum: None,
                n_retained: rows.len(),
                max_jitter: 0.0,
                seed: 0,
                chain_id: 0,
            }
        };
        assert_eq!(posterior_mean(&mk(&[&[1.0, 2.0]])).unwrap(), DVector::from_row_slice(&[1.0, 2.0]));
        assert_eq!(
            posterior_mean(&mk(&[&[1.0, 2.0], &[3.0, -2.0]])).unwrap(),
            DVector::from_row_slice(&[2.0, 0.0])
        );
        let mut empty = mk(&[&[0.0]]);
        empty.n_retained = 0;
        assert!(matches!(posterior_mean(&empty), Err(Error::EmptyChain)));
    }

    #[test]
    fn config_validation() {
        let bad = McmcConfig {
            n_draws: 10,
            n_burn: 10,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
