//! Monte Carlo study: an endogenous-treatment data-generating process with
//! a known impulse response, a replication harness over estimators and
//! sample sizes, and the bias / RMSE / length / coverage metric suite.
//!
//! The process is
//!
//! ```text
//! z_t ~ N(0, 1),  u_t ~ N(0, σ_u²),  v_t ~ N(0, σ_v²),  e_t ~ N(0, σ_e²)
//! r_t = π_z z_t + κ_u u_t + v_t
//! y_t = φ y_{t-1} + β r_t + u_t + e_t
//! ```
//!
//! so `u_t` confounds treatment and outcome while `z_t` is a valid
//! instrument, and the response of `y_{t+h}` to a unit `r_t` shock is
//! `β φ^h`.

use std::path::Path;

use chrono::NaiveDate;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{daily_dates, Dataset, Series};
use crate::design::{build_design, SpecConfig, SpecKind};
use crate::error::{Error, Result};
use crate::estimate::{estimate, EstimationConfig, Estimator};
use crate::inference::SupTSettings;
use crate::rng::{child_stream, stream_rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DgpParams {
    pub phi: f64,
    pub beta: f64,
    pub pi_z: f64,
    pub kappa_u: f64,
    pub sigma_u: f64,
    pub sigma_v: f64,
    pub sigma_e: f64,
    /// Number of observations returned (after burn-in).
    pub t: usize,
    pub burn_in: usize,
}

impl Default for DgpParams {
    fn default() -> Self {
        DgpParams {
            phi: 0.7,
            beta: 1.0,
            pi_z: 1.0,
            kappa_u: 0.5,
            sigma_u: 1.0,
            sigma_v: 1.0,
            sigma_e: 1.0,
            t: 200,
            burn_in: 200,
        }
    }
}

impl DgpParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(self.phi.abs() < 1.0) {
            return bad("|phi| must be below 1");
        }
        if self.pi_z == 0.0 || !self.pi_z.is_finite() {
            return bad("pi_z must be non-zero");
        }
        if !(self.sigma_v > 0.0 && self.sigma_e > 0.0 && self.sigma_u >= 0.0) {
            return bad("noise standard deviations must be positive (sigma_u may be zero)");
        }
        if self.t < 2 {
            return bad("t must be at least 2");
        }
        Ok(())
    }
}

/// `(β φ^0, ..., β φ^H)`.
pub fn true_irf(params: &DgpParams, horizons: usize) -> Vec<f64> {
    (0..=horizons).map(|h| params.beta * params.phi.powi(h as i32)).collect()
}

/// Simulate one sample. Returns the dataset (outcome `y`, treatment `r`,
/// instrument `z`) and the true impulse response up to `horizons`.
pub fn generate_dgp<R: Rng + ?Sized>(params: &DgpParams, horizons: usize, rng: &mut R) -> Result<(Dataset, Vec<f64>)> {
    params.validate()?;
    let total = params.t + params.burn_in;
    let mut n = || -> f64 { StandardNormal.sample(rng) };
    let mut y_prev = 0.0;
    let (mut ys, mut rs, mut zs) = (Vec::with_capacity(params.t), Vec::with_capacity(params.t), Vec::with_capacity(params.t));
    for s in 0..total {
        let z = n();
        let u = params.sigma_u * n();
        let v = params.sigma_v * n();
        let e = params.sigma_e * n();
        let r = params.pi_z * z + params.kappa_u * u + v;
        let y = params.phi * y_prev + params.beta * r + u + e;
        y_prev = y;
        if s >= params.burn_in {
            ys.push(y);
            rs.push(r);
            zs.push(z);
        }
    }
    let dates = daily_dates(NaiveDate::from_ymd_opt(2000, 1, 1).unwrap(), params.t);
    let ds = Dataset::new(
        dates,
        Series::new("y", ys),
        vec![Series::new("r", rs)],
        vec![Series::new("z", zs)],
        vec![],
        vec![],
    )?;
    Ok((ds, true_irf(params, horizons)))
}

/// One replication's output for one estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct RepOutcome {
    pub estimate: Vec<f64>,
    pub ci_lo: Vec<f64>,
    pub ci_hi: Vec<f64>,
    pub band_lo: Vec<f64>,
    pub band_hi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointwiseCell {
    pub estimator: String,
    #[serde(rename = "T")]
    pub t: usize,
    pub h: usize,
    pub bias: f64,
    pub rmse: f64,
    pub length: f64,
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimultaneousCell {
    pub estimator: String,
    #[serde(rename = "T")]
    pub t: usize,
    pub coverage: f64,
    pub replications: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McReport {
    pub pointwise: Vec<PointwiseCell>,
    pub simultaneous: Vec<SimultaneousCell>,
    pub replications: usize,
    pub seed: u64,
}

impl McReport {
    pub fn cell(&self, est: Estimator, t: usize, h: usize) -> Option<&PointwiseCell> {
        self.pointwise
            .iter()
            .find(|c| c.estimator == est.label() && c.t == t && c.h == h)
    }

    pub fn simultaneous_cell(&self, est: Estimator, t: usize) -> Option<&SimultaneousCell> {
        self.simultaneous.iter().find(|c| c.estimator == est.label() && c.t == t)
    }

    pub fn write_csv(&self, pointwise: &Path, simultaneous: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(pointwise)?;
        for c in &self.pointwise {
            w.serialize(c)?;
        }
        w.flush().map_err(|e| Error::io(pointwise, e))?;
        let mut w = csv::Writer::from_path(simultaneous)?;
        for c in &self.simultaneous {
            w.serialize(c)?;
        }
        w.flush().map_err(|e| Error::io(simultaneous, e))?;
        Ok(())
    }
}

/// Metrics over replications for one (estimator, T) cell. Failed
/// replications (`None`) are excluded and counted.
pub fn aggregate(
    estimator: &str,
    t: usize,
    truth: &[f64],
    outcomes: &[Option<RepOutcome>],
) -> (Vec<PointwiseCell>, SimultaneousCell) {
    let ok: Vec<&RepOutcome> = outcomes.iter().flatten().collect();
    let n = ok.len() as f64;
    let cells = truth
        .iter()
        .enumerate()
        .map(|(h, &g)| {
            let mut bias = 0.0;
            let mut mse = 0.0;
            let mut length = 0.0;
            let mut hits = 0usize;
            for o in &ok {
                let err = o.estimate[h] - g;
                bias += err;
                mse += err * err;
                length += o.ci_hi[h] - o.ci_lo[h];
                hits += usize::from(o.ci_lo[h] <= g && g <= o.ci_hi[h]);
            }
            PointwiseCell {
                estimator: estimator.to_string(),
                t,
                h,
                bias: bias / n,
                rmse: (mse / n).sqrt(),
                length: length / n,
                coverage: hits as f64 / n,
            }
        })
        .collect();
    let sim_hits = ok
        .iter()
        .filter(|o| truth.iter().enumerate().all(|(h, &g)| o.band_lo[h] <= g && g <= o.band_hi[h]))
        .count();
    let sim = SimultaneousCell {
        estimator: estimator.to_string(),
        t,
        coverage: sim_hits as f64 / n,
        replications: ok.len(),
        failures: outcomes.len() - ok.len(),
    };
    (cells, sim)
}

#[derive(Debug, Clone, PartialEq)]
pub struct McGrid {
    /// Trimmed sample sizes `T`.
    pub sample_sizes: Vec<usize>,
    pub estimators: Vec<Estimator>,
    pub replications: usize,
    pub dgp: DgpParams,
    pub spec: SpecConfig,
    pub estimation: EstimationConfig,
    pub seed: u64,
}

impl Default for McGrid {
    fn default() -> Self {
        McGrid {
            sample_sizes: vec![200, 500, 1000],
            estimators: vec![Estimator::Gmm, Estimator::QbFlat, Estimator::QbRp],
            replications: 200,
            dgp: DgpParams::default(),
            spec: SpecConfig {
                kind: SpecKind::Ld,
                horizons: 7,
                lags: 2,
                fourier: 0,
                day_of_week: false,
            },
            estimation: EstimationConfig::default(),
            seed: 20_240_601,
        }
    }
}

fn run_replication(grid: &McGrid, t: usize, rep: usize) -> Vec<Option<RepOutcome>> {
    let rep_stream = child_stream(child_stream(grid.seed, t as u64), rep as u64);
    let extra = grid.spec.lags + 1 + grid.spec.horizons;
    let params = DgpParams {
        t: t + extra,
        ..grid.dgp
    };
    let mut rng = stream_rng(grid.seed, rep_stream);
    let Ok((ds, _)) = generate_dgp(&params, grid.spec.horizons, &mut rng) else {
        return vec![None; grid.estimators.len()];
    };
    let Ok(design) = build_design(&ds, &grid.spec) else {
        return vec![None; grid.estimators.len()];
    };
    grid.estimators
        .iter()
        .enumerate()
        .map(|(ei, &est)| {
            let mut cfg = grid.estimation.clone();
            cfg.mcmc.seed = grid.seed;
            cfg.mcmc.chain_id = child_stream(rep_stream, 2 * ei as u64);
            cfg.mcmc.keep_draws = false;
            cfg.sup_t = SupTSettings {
                seed: grid.seed,
                stream: child_stream(rep_stream, 2 * ei as u64 + 1),
                ..cfg.sup_t
            };
            let e = estimate(&design, est, &cfg).ok()?;
            let rows: Vec<_> = e.irf.rows.iter().filter(|r| r.treatment == "r").collect();
            Some(RepOutcome {
                estimate: rows.iter().map(|r| r.estimate).collect(),
                ci_lo: rows.iter().map(|r| r.ci_lo).collect(),
                ci_hi: rows.iter().map(|r| r.ci_hi).collect(),
                band_lo: rows.iter().map(|r| r.band_lo).collect(),
                band_hi: rows.iter().map(|r| r.band_hi).collect(),
            })
        })
        .collect()
}

/// Run every (T, replication) on the current rayon pool and aggregate in
/// replication order, so results do not depend on the worker count.
pub fn run_monte_carlo(grid: &McGrid) -> Result<McReport> {
    if grid.replications == 0 || grid.sample_sizes.is_empty() || grid.estimators.is_empty() {
        return Err(Error::InvalidParameter("empty Monte Carlo grid".into()));
    }
    grid.dgp.validate()?;
    let truth = true_irf(&grid.dgp, grid.spec.horizons);
    let mut pointwise = Vec::new();
    let mut simultaneous = Vec::new();
    for &t in &grid.sample_sizes {
        let reps: Vec<Vec<Option<RepOutcome>>> = (0..grid.replications)
            .into_par_iter()
            .map(|rep| run_replication(grid, t, rep))
            .collect();
        for (ei, est) in grid.estimators.iter().enumerate() {
            let col: Vec<Option<RepOutcome>> = reps.iter().map(|r| r[ei].clone()).collect();
            let (cells, sim) = aggregate(est.label(), t, &truth, &col);
            pointwise.extend(cells);
            simultaneous.push(sim);
        }
    }
    Ok(McReport {
        pointwise,
        simultaneous,
        replications: grid.replications,
        seed: grid.seed,
    })
}
