//! Frequentist uncertainty around a point estimate: pointwise normal
//! intervals from the sandwich covariance and sup-t simultaneous bands.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::design::LpDesign;
use crate::error::{Error, Result};
use crate::linalg::cholesky_jittered;
use crate::rng::{child_stream, stream_rng};

/// Draws simulated per parallel block in [`sup_t_critical_value`].
const SIM_BLOCK: usize = 8_192;

pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Two-sided critical value `z_{(1+level)/2}`.
pub fn pointwise_critical_value(level: f64) -> f64 {
    normal_quantile(0.5 * (1.0 + level))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("confidence level must lie in (0, 1), got {level}")))
    }
}

/// `θ̂_k ± z · sqrt(V̂_kk)` for each requested coordinate.
pub fn pointwise_intervals(
    theta: &DVector<f64>,
    v: &DMatrix<f64>,
    level: f64,
    coords: &[usize],
) -> Result<Vec<Interval>> {
    check_level(level)?;
    let z = pointwise_critical_value(level);
    coords
        .iter()
        .map(|&k| {
            let var = v[(k, k)];
            if var < 0.0 {
                return Err(Error::NegativeVariance { coord: k, value: var });
            }
            let half = z * var.sqrt();
            Ok(Interval {
                lo: theta[k] - half,
                hi: theta[k] + half,
            })
        })
        .collect()
}

/// Monte Carlo settings for the sup-t critical value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupTSettings {
    pub n_sim: usize,
    pub seed: u64,
    pub stream: u64,
}

impl Default for SupTSettings {
    fn default() -> Self {
        SupTSettings {
            n_sim: 100_000,
            seed: 1,
            stream: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SupTBand {
    pub critical_value: f64,
    pub bands: Vec<Interval>,
    /// Coordinates with zero variance left out of the max statistic.
    pub dropped: Vec<usize>,
}

/// Correlation matrix of a covariance with strictly positive diagonal.
pub fn correlation_from_covariance(v: &DMatrix<f64>) -> DMatrix<f64> {
    let n = v.nrows();
    let sd: Vec<f64> = (0..n).map(|i| v[(i, i)].sqrt()).collect();
    DMatrix::from_fn(n, n, |r, c| if r == c { 1.0 } else { v[(r, c)] / (sd[r] * sd[c]) })
}

/// Empirical `level` quantile of `max_h |ξ_h|`, `ξ ~ N(0, corr)`.
///
/// Draws are generated in fixed-size blocks with their own RNG streams, so
/// the result depends only on the settings, not on the thread count.
pub fn sup_t_critical_value(corr: &DMatrix<f64>, level: f64, sim: SupTSettings) -> Result<f64> {
    check_level(level)?;
    if sim.n_sim == 0 {
        return Err(Error::InvalidParameter("n_sim must be positive".into()));
    }
    let n = corr.nrows();
    let l = cholesky_jittered(corr, "sup-t correlation")?.factor.l();
    let n_blocks = sim.n_sim.div_ceil(SIM_BLOCK);
    let mut maxima: Vec<f64> = (0..n_blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = stream_rng(sim.seed, child_stream(sim.stream, b as u64));
            let count = SIM_BLOCK.min(sim.n_sim - b * SIM_BLOCK);
            let mut e = DVector::zeros(n);
            let mut out = Vec::with_capacity(count);
            for _ in 0..count {
                for v in e.iter_mut() {
                    *v = StandardNormal.sample(&mut rng);
                }
                let xi = &l * &e;
                out.push(xi.amax());
            }
            out
        })
        .collect();
    maxima.sort_by(|a, b| a.total_cmp(b));
    let idx = ((level * maxima.len() as f64).ceil() as usize).clamp(1, maxima.len()) - 1;
    Ok(maxima[idx])
}

/// Simultaneous band `θ̂_h ± c · sqrt(V̂_hh)` over one impulse response.
pub fn sup_t_band(estimate: &DVector<f64>, v: &DMatrix<f64>, level: f64, sim: SupTSettings) -> Result<SupTBand> {
    let n = estimate.len();
    if v.nrows() != n || v.ncols() != n {
        return Err(Error::Dimension(format!("V̂_γ must be {n}x{n}")));
    }
    for i in 0..n {
        if v[(i, i)] < 0.0 {
            return Err(Error::NegativeVariance { coord: i, value: v[(i, i)] });
        }
    }
    let (kept, dropped): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| v[(i, i)] > 0.0);
    let critical_value = if kept.is_empty() {
        pointwise_critical_value(level)
    } else {
        let sub = v.select_rows(&kept).select_columns(&kept);
        sup_t_critical_value(&correlation_from_covariance(&sub), level, sim)?
    };
    let bands = (0..n)
        .map(|i| {
            let half = critical_value * v[(i, i)].sqrt();
            Interval {
                lo: estimate[i] - half,
                hi: estimate[i] + half,
            }
        })
        .collect();
    Ok(SupTBand {
        critical_value,
        bands,
        dropped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IrfRow {
    pub treatment: String,
    pub horizon: i64,
    pub estimate: f64,
    pub se: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub band_lo: f64,
    pub band_hi: f64,
    pub level: f64,
}

#[derive(Debug, Clone)]
pub struct IrfResult {
    pub rows: Vec<IrfRow>,
    pub level: f64,
    pub pointwise_critical: f64,
    /// Sup-t critical value per treatment, in treatment order.
    pub sup_t_critical: Vec<(String, f64)>,
    /// Horizons dropped from a band's max statistic, per treatment.
    pub dropped: Vec<(String, Vec<i64>)>,
}

impl IrfResult {
    pub fn for_treatment<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a IrfRow> + 'a {
        self.rows.iter().filter(move |r| r.treatment == name)
    }
}

/// Assemble per-treatment impulse responses with pointwise intervals and a
/// separate sup-t band for each treatment.
pub fn extract_irf(
    theta: &DVector<f64>,
    v: &DMatrix<f64>,
    design: &LpDesign,
    treatments: &[String],
    level: f64,
    sim: SupTSettings,
) -> Result<IrfResult> {
    check_level(level)?;
    let mut rows = Vec::new();
    let mut sup = Vec::new();
    let mut dropped_all = Vec::new();
    for (ti, name) in treatments.iter().enumerate() {
        let idx = design
            .treatment_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownTreatment(name.clone()))?;
        let coords = design.treatment_coords(idx);
        let est = DVector::from_iterator(coords.len(), coords.iter().map(|&k| theta[k]));
        let vg = v.select_rows(&coords).select_columns(&coords);
        let pw = pointwise_intervals(theta, v, level, &coords)?;
        let band = sup_t_band(
            &est,
            &vg,
            level,
            SupTSettings {
                stream: child_stream(sim.stream, ti as u64),
                ..sim
            },
        )?;
        for (h, &k) in coords.iter().enumerate() {
            rows.push(IrfRow {
                treatment: name.clone(),
                horizon: design.horizons[h],
                estimate: theta[k],
                se: v[(k, k)].sqrt(),
                ci_lo: pw[h].lo,
                ci_hi: pw[h].hi,
                band_lo: band.bands[h].lo,
                band_hi: band.bands[h].hi,
                level,
            });
        }
        sup.push((name.clone(), band.critical_value));
        if !band.dropped.is_empty() {
            dropped_all.push((name.clone(), band.dropped.iter().map(|&h| design.horizons[h]).collect()));
        }
    }
    Ok(IrfResult {
        rows,
        level,
        pointwise_critical: pointwise_critical_value(level),
        sup_t_critical: sup,
        dropped: dropped_all,
    })
}

/// Write `treatment,horizon,estimate,se,ci_lo,ci_hi,band_lo,band_hi,level`.
pub fn write_irf_csv(result: &IrfResult, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in &result.rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
