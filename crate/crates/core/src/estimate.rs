//! End-to-end estimation for one design: GMM benchmark or quasi-Bayesian
//! estimation, followed by sandwich covariance and IRF bands.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::design::LpDesign;
use crate::error::{Error, Result};
use crate::gmm::{moment_covariance, sandwich_covariance, two_step_gmm, CovMode, MomentModel};
use crate::inference::{extract_irf, IrfResult, SupTSettings};
use crate::prior::PriorConfig;
use crate::sampler::{posterior_mean, run_gibbs, Chain, McmcConfig, PriorMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Estimator {
    /// System-wide two-step GMM.
    Gmm,
    /// Quasi-posterior mean under a flat prior.
    QbFlat,
    /// Quasi-posterior mean under the roughness-penalty prior.
    QbRp,
}

impl Estimator {
    pub fn label(&self) -> &'static str {
        match self {
            Estimator::Gmm => "gmm",
            Estimator::QbFlat => "qb_flat",
            Estimator::QbRp => "qb_rp",
        }
    }
}

impl std::str::FromStr for Estimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gmm" => Ok(Estimator::Gmm),
            "qb_flat" | "flat" => Ok(Estimator::QbFlat),
            "qb_rp" | "rp" => Ok(Estimator::QbRp),
            other => Err(Error::Config(format!("unknown estimator `{other}` (gmm|qb_flat|qb_rp)"))),
        }
    }
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationConfig {
    pub cov_mode: CovMode,
    pub prior: PriorConfig,
    pub mcmc: McmcConfig,
    pub level: f64,
    pub sup_t: SupTSettings,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        EstimationConfig {
            cov_mode: CovMode::Plain,
            prior: PriorConfig::default(),
            mcmc: McmcConfig::default(),
            level: 0.90,
            sup_t: SupTSettings::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Estimate {
    pub estimator: Estimator,
    pub theta_hat: DVector<f64>,
    pub theta_star: DVector<f64>,
    pub v_hat: DMatrix<f64>,
    pub irf: IrfResult,
    pub chain: Option<Chain>,
}

/// Estimate all treatments' impulse responses on `design`.
pub fn estimate(design: &LpDesign, estimator: Estimator, cfg: &EstimationConfig) -> Result<Estimate> {
    let (theta_hat, theta_star, v_hat, chain) = match estimator {
        Estimator::Gmm => {
            let gmm = two_step_gmm(design, cfg.cov_mode)?;
            let meat_mode = match cfg.cov_mode {
                CovMode::BlockDiag => CovMode::Plain,
                m => m,
            };
            let sigma = moment_covariance(design, &gmm.theta, meat_mode)?;
            let g = crate::gmm::jacobian(design);
            let v = sandwich_covariance(&g, &gmm.weight, &sigma, design.t())?;
            (gmm.theta.clone(), gmm.theta_stage1, v, None)
        }
        Estimator::QbFlat | Estimator::QbRp => {
            let model = MomentModel::new(design, cfg.cov_mode)?;
            let prior = if estimator == Estimator::QbFlat {
                PriorMode::Flat
            } else {
                PriorMode::Roughness(cfg.prior)
            };
            let chain = run_gibbs(&model, &prior, &cfg.mcmc)?;
            let theta_hat = posterior_mean(&chain)?;
            let v = model.sandwich_at(design, &theta_hat)?;
            (theta_hat, model.theta_star.clone(), v, Some(chain))
        }
    };
    let irf = extract_irf(&theta_hat, &v_hat, design, &design.treatment_names, cfg.level, cfg.sup_t)?;
    Ok(Estimate {
        estimator,
        theta_hat,
        theta_star,
        v_hat,
        irf,
        chain,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmm::tests::random_design;

    fn quick() -> EstimationConfig {
        EstimationConfig {
            mcmc: McmcConfig {
                n_draws: 2_000,
                n_burn: 200,
                seed: 5,
                ..Default::default()
            },
            sup_t: SupTSettings {
                n_sim: 5_000,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn estimators_produce_nested_bands() {
        let d = random_design(31, 250, 3, 5);
        for est in [Estimator::Gmm, Estimator::QbFlat, Estimator::QbRp] {
            let e = estimate(&d, est, &quick()).unwrap();
            assert_eq!(e.irf.rows.len(), 5);
            for r in &e.irf.rows {
                assert!(r.band_lo <= r.ci_lo && r.ci_lo <= r.estimate);
                assert!(r.estimate <= r.ci_hi && r.ci_hi <= r.band_hi);
            }
            let (_, c) = &e.irf.sup_t_critical[0];
            assert!(*c >= e.irf.pointwise_critical);
            for (h, r) in e.irf.rows.iter().enumerate() {
                assert_eq!(r.estimate, e.theta_hat[h * 3]);
            }
        }
    }

    #[test]
    fn gmm_equals_theta_star() {
        let d = random_design(32, 200, 3, 3);
        let e = estimate(&d, Estimator::Gmm, &quick()).unwrap();
        assert!((&e.theta_hat - &e.theta_star).norm() < 1e-8 * e.theta_star.norm());
    }

    #[test]
    fn estimator_names_round_trip() {
        for e in [Estimator::Gmm, Estimator::QbFlat, Estimator::QbRp] {
            assert_eq!(e.label().parse::<Estimator>().unwrap(), e);
        }
        assert!("ols".parse::<Estimator>().is_err());
    }
}
