//! Proper roughness-penalty prior over horizon-indexed coefficient paths.
//!
//! Each coefficient path `θ_j = (θ_(0),j, ..., θ_(H),j)` receives a zero-mean
//! Gaussian prior with precision `τ_j^{-2} Q`, where
//! `Q = D'D + (8/ρ²) I` and `D` takes first differences. The first term
//! penalizes roughness, the ridge term makes the prior proper.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorConfig {
    /// Correlation range in horizons.
    pub rho: f64,
    /// Half-Cauchy scale of each path's `τ_j`.
    pub kappa: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        PriorConfig { rho: 4.0, kappa: 1.0 }
    }
}

impl PriorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::InvalidParameter(format!("rho must be positive and finite, got {}", self.rho)));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!("kappa must be positive and finite, got {}", self.kappa)));
        }
        Ok(())
    }
}

/// `H x (H+1)` first-difference matrix: row `i` is `-1` at `i`, `+1` at `i+1`.
pub fn difference_matrix(horizons: usize) -> Result<DMatrix<f64>> {
    if horizons < 1 {
        return Err(Error::InvalidParameter("difference matrix needs H >= 1".into()));
    }
    let mut d = DMatrix::zeros(horizons, horizons + 1);
    for i in 0..horizons {
        d[(i, i)] = -1.0;
        d[(i, i + 1)] = 1.0;
    }
    Ok(d)
}

/// Ridge weight `8 / ρ²`.
pub fn ridge(rho: f64) -> f64 {
    8.0 / (rho * rho)
}

/// `Q = D'D + (8/ρ²) I`, an `(H+1) x (H+1)` tridiagonal matrix.
pub fn smoothing_precision(horizons: usize, rho: f64) -> Result<DMatrix<f64>> {
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter(format!("rho must be positive, got {rho}")));
    }
    let d = difference_matrix(horizons)?;
    let mut q = d.transpose() * d;
    let lambda = ridge(rho);
    for i in 0..=horizons {
        q[(i, i)] += lambda;
    }
    Ok(q)
}

/// Approximate interior prior correlation `exp(-√8 · distance / ρ)`.
pub fn prior_correlation(distance: f64, rho: f64) -> f64 {
    (-(8.0f64).sqrt() * distance / rho).exp()
}

/// `Π = Q ⊗ diag(τ₁^{-2}, ..., τ_J^{-2})` for horizon-major stacking.
///
/// `tau` holds the scales `τ_j` (not their squares).
pub fn stacked_prior_precision(q: &DMatrix<f64>, tau: &[f64]) -> Result<DMatrix<f64>> {
    let inv_sq = tau
        .iter()
        .map(|t| {
            if *t > 0.0 {
                Ok(1.0 / (t * t))
            } else {
                Err(Error::InvalidParameter(format!("prior scale must be positive, got {t}")))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(stacked_from_inverse_variances(q, &inv_sq))
}

/// Same as [`stacked_prior_precision`] from precomputed `τ_j^{-2}`.
pub(crate) fn stacked_from_inverse_variances(q: &DMatrix<f64>, inv_sq: &[f64]) -> DMatrix<f64> {
    let diag = DMatrix::from_diagonal(&DVector::from_column_slice(inv_sq));
    q.kronecker(&diag)
}

/// Path `j` extracted from a horizon-major stacked vector.
pub fn coefficient_path(theta: &DVector<f64>, j: usize, n_cov: usize) -> DVector<f64> {
    let nh = theta.len() / n_cov;
    DVector::from_fn(nh, |h, _| theta[h * n_cov + j])
}

/// Roughness `Σ_j θ_j' (D'D) θ_j` of a stacked coefficient vector.
pub fn roughness(theta: &DVector<f64>, n_cov: usize) -> Result<f64> {
    let nh = theta.len() / n_cov;
    let d = difference_matrix(nh - 1)?;
    let dtd = d.transpose() * d;
    Ok((0..n_cov)
        .map(|j| {
            let p = coefficient_path(theta, j, n_cov);
            (p.transpose() * &dtd * &p)[(0, 0)]
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn difference_examples() {
        assert_eq!(difference_matrix(1).unwrap(), DMatrix::from_row_slice(1, 2, &[-1.0, 1.0]));
        let d = difference_matrix(5).unwrap();
        assert_eq!((d.clone() * DVector::from_element(6, 1.0)).amax(), 0.0);
        let dtd = difference_matrix(2).unwrap().transpose() * difference_matrix(2).unwrap();
        assert_eq!(
            dtd,
            DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0])
        );
        assert!(difference_matrix(0).is_err());
    }

    #[test]
    fn precision_example_and_invariants() {
        let q = smoothing_precision(2, 4.0).unwrap();
        assert_eq!(
            q,
            DMatrix::from_row_slice(3, 3, &[1.5, -1.0, 0.0, -1.0, 2.5, -1.0, 0.0, -1.0, 1.5])
        );
        for rho in [2.0, 4.0, 8.0] {
            for h in [1, 7, 30] {
                let q = smoothing_precision(h, rho).unwrap();
                let q1 = &q * DVector::from_element(h + 1, 1.0);
                assert!(q1.iter().all(|v| *v == ridge(rho)));
                for r in 0..=h {
                    for c in 0..=h {
                        if r.abs_diff(c) > 1 {
                            assert_eq!(q[(r, c)], 0.0);
                        }
                    }
                }
                let min_eig = q.clone().symmetric_eigen().eigenvalues.min();
                assert!(min_eig >= ridge(rho) - 1e-12);
                assert!(q.clone().cholesky().is_some());
            }
        }
        assert!(smoothing_precision(3, 0.0).is_err());
        // ridge vanishes as rho grows
        let q = smoothing_precision(5, 1e8).unwrap();
        assert!(q.symmetric_eigen().eigenvalues.min() < 1e-10);
    }

    #[test]
    fn correlation_values() {
        assert!((prior_correlation(1.0, 4.0) - 0.493).abs() < 5e-4);
        assert!((prior_correlation(3.0, 4.0) - 0.120).abs() < 5e-4);
        assert!((prior_correlation(5.0, 4.0) - 0.029).abs() < 5e-4);
        assert!((prior_correlation(7.0, 4.0) - 0.007).abs() < 5e-4);
        assert_eq!(prior_correlation(0.0, 4.0), 1.0);
        for d in 0..10 {
            assert!(prior_correlation(d as f64 + 1.0, 4.0) < prior_correlation(d as f64, 4.0));
            if d >= 1 {
                assert!(prior_correlation(d as f64, 8.0) > prior_correlation(d as f64, 4.0));
            }
        }
        for rho in [4.0f64, 8.0] {
            let dist = (0.25 * rho).round();
            assert!((prior_correlation(dist, rho) - 0.5).abs() < 0.1);
        }
    }

    #[test]
    fn interior_correlation_of_q_inverse() {
        let h = 200;
        let q = smoothing_precision(h, 4.0).unwrap();
        let cov = q.try_inverse().unwrap();
        let corr = |a: usize, b: usize| cov[(a, b)] / (cov[(a, a)] * cov[(b, b)]).sqrt();
        for i in (h + 1) / 3..2 * (h + 1) / 3 {
            assert!((corr(i, i + 1) - 0.493).abs() < 0.05);
            assert!((corr(i, i + 3) - 0.120).abs() < 0.05);
        }
    }

    #[test]
    fn stacked_precision() {
        let q = smoothing_precision(3, 4.0).unwrap();
        assert_eq!(stacked_prior_precision(&q, &[1.0]).unwrap(), q);
        let big = stacked_prior_precision(&q, &[1e9, 1e9]).unwrap();
        assert!(big.amax() < 1e-17);
        assert!(stacked_prior_precision(&q, &[1.0, 0.0]).is_err());

        let tau = [0.5, 2.0, 1.3];
        let pi = stacked_prior_precision(&q, &tau).unwrap();
        assert!(pi.clone().cholesky().is_some());
        let mut rng = stream_rng(3, 0);
        for _ in 0..5 {
            let theta = DVector::from_fn(12, |_, _| StandardNormal.sample(&mut rng));
            let lhs = (theta.transpose() * &pi * &theta)[(0, 0)];
            let rhs: f64 = (0..3)
                .map(|j| {
                    let p = coefficient_path(&theta, j, 3);
                    (p.transpose() * &q * &p)[(0, 0)] / (tau[j] * tau[j])
                })
                .sum();
            assert!((lhs - rhs).abs() < 1e-10 * rhs.abs().max(1.0));
        }
    }
}
