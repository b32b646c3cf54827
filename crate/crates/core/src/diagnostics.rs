//! Instrument diagnostics: first-stage relevance, placebo regressions on
//! predetermined variables, and the lead-placebo local projection.
//!
//! All regressions share the baseline controls of the estimation design
//! (constant, outcome lags, Fourier terms, controls, day-of-week and event
//! indicators) evaluated on the same trimmed origins. Wald statistics use an
//! HC1 heteroskedasticity-robust covariance.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::dataset::Dataset;
use crate::design::{build_design, build_lead_design, LpDesign, SpecConfig};
use crate::error::{Error, Result};
use crate::estimate::{estimate, EstimationConfig, Estimator};
use crate::gmm::MAX_CONDITION;
use crate::inference::IrfResult;
use crate::linalg::{condition_number, smallest_singular_value};

/// Relevance statistics of a block of excluded regressors.
#[derive(Debug, Clone, PartialEq)]
pub struct Relevance {
    pub coefficients: Vec<f64>,
    pub partial_r2: f64,
    pub wald: f64,
    pub df: usize,
    pub p_value: f64,
}

struct Ols {
    beta: DVector<f64>,
    resid: DVector<f64>,
    xtx_inv: DMatrix<f64>,
}

fn ols(y: &DVector<f64>, x: &DMatrix<f64>) -> Result<Ols> {
    let xtx = x.transpose() * x;
    let cond = condition_number(&xtx);
    if !(cond < MAX_CONDITION) {
        return Err(Error::IllConditioned(cond));
    }
    let chol = xtx
        .cholesky()
        .ok_or(Error::NotPositiveDefinite { what: "regressor cross-product" })?;
    let beta = chol.solve(&(x.transpose() * y));
    let resid = y - x * &beta;
    Ok(Ols {
        beta,
        resid,
        xtx_inv: chol.inverse(),
    })
}

fn hstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    m.columns_mut(0, a.ncols()).copy_from(a);
    m.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    m
}

/// Regress `y` on `[excluded, controls]` and test the excluded block.
///
/// Partial R² is `(RSS_r − RSS_f) / RSS_r` with the restricted model using
/// `controls` only. The Wald statistic uses the HC1 covariance and is
/// referred to χ² with one degree of freedom per excluded column; a perfect
/// fit gives an infinite statistic.
pub fn relevance(y: &DVector<f64>, excluded: &DMatrix<f64>, controls: &DMatrix<f64>) -> Result<Relevance> {
    let n = y.len();
    let k_ex = excluded.ncols();
    if excluded.nrows() != n || controls.nrows() != n {
        return Err(Error::Dimension("regressors and dependent variable differ in length".into()));
    }
    if k_ex == 0 {
        return Err(Error::InvalidParameter("no excluded regressors to test".into()));
    }
    let x = hstack(excluded, controls);
    let k = x.ncols();
    if n <= k {
        return Err(Error::TooFewOrigins { t: n, j: k });
    }
    let full = ols(y, &x)?;
    let rss_f = full.resid.norm_squared();
    let rss_r = if controls.ncols() == 0 {
        y.norm_squared()
    } else {
        ols(y, controls)?.resid.norm_squared()
    };
    if !(rss_r > 0.0) {
        return Err(Error::ZeroVariance("dependent variable after partialling out controls".into()));
    }
    let partial_r2 = ((rss_r - rss_f) / rss_r).clamp(0.0, 1.0);

    let mut meat = DMatrix::zeros(k, k);
    for (r, e) in full.resid.iter().enumerate() {
        let row = x.row(r);
        meat.ger(e * e, &row.transpose(), &row.transpose(), 1.0);
    }
    let v = &full.xtx_inv * meat * &full.xtx_inv * (n as f64 / (n - k) as f64);
    let b = full.beta.rows(0, k_ex).into_owned();
    let v_ex = v.view((0, 0), (k_ex, k_ex)).into_owned();
    let wald = match v_ex.cholesky() {
        Some(c) => b.dot(&c.solve(&b)).max(0.0),
        None => f64::INFINITY,
    };
    let p_value = if wald.is_finite() {
        ChiSquared::new(k_ex as f64)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .sf(wald)
    } else {
        0.0
    };
    Ok(Relevance {
        coefficients: b.iter().copied().collect(),
        partial_r2,
        wald,
        df: k_ex,
        p_value,
    })
}

fn zscore(col: &mut [f64], name: &str) -> Result<()> {
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    if !(sd > 0.0) {
        return Err(Error::ZeroVariance(name.to_string()));
    }
    col.iter_mut().for_each(|v| *v = (*v - mean) / sd);
    Ok(())
}

/// Standardized instruments and baseline controls on the design sample.
struct Regressors {
    instruments: DMatrix<f64>,
    controls: DMatrix<f64>,
    names: Vec<String>,
}

fn regressors(ds: &Dataset, design: &LpDesign) -> Result<Regressors> {
    let nt = design.n_treatments();
    let mut instruments = design.z.columns(0, nt).into_owned();
    for (i, s) in ds.instruments.iter().enumerate() {
        zscore(instruments.column_mut(i).as_mut_slice(), &s.name)?;
    }
    Ok(Regressors {
        instruments,
        controls: design.x.columns(nt, design.j() - nt).into_owned(),
        names: ds.instruments.iter().map(|s| s.name.clone()).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirstStageRow {
    pub treatment: String,
    pub relevance: Relevance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirstStageReport {
    pub instruments: Vec<String>,
    pub rows: Vec<FirstStageRow>,
    /// (treatment × instrument) matrix of standardized coefficients.
    pub coefficient_matrix: DMatrix<f64>,
    pub smallest_singular_value: f64,
}

/// Regress each standardized treatment on all standardized instruments and
/// the baseline controls of `cfg`'s design.
pub fn first_stage(ds: &Dataset, cfg: &SpecConfig) -> Result<FirstStageReport> {
    let design = build_design(ds, cfg)?;
    let reg = regressors(ds, &design)?;
    let nt = design.n_treatments();
    let mut rows = Vec::with_capacity(nt);
    let mut coef = DMatrix::zeros(nt, nt);
    for (i, s) in ds.treatments.iter().enumerate() {
        let mut d: Vec<f64> = design.x.column(i).iter().copied().collect();
        zscore(&mut d, &s.name)?;
        let rel = relevance(&DVector::from_vec(d), &reg.instruments, &reg.controls)?;
        for (c, b) in rel.coefficients.iter().enumerate() {
            coef[(i, c)] = *b;
        }
        rows.push(FirstStageRow {
            treatment: s.name.clone(),
            relevance: rel,
        });
    }
    Ok(FirstStageReport {
        instruments: reg.names,
        rows,
        smallest_singular_value: smallest_singular_value(&coef),
        coefficient_matrix: coef,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlaceboRow {
    pub variable: String,
    pub lag: usize,
    pub relevance: Relevance,
}

/// Regress lagged outcome, treatments and controls (`v_{t−lag}`) on the
/// instruments and baseline controls at each origin `t`.
pub fn placebo_predetermined(ds: &Dataset, lags: &[usize], cfg: &SpecConfig) -> Result<Vec<PlaceboRow>> {
    let design = build_design(ds, cfg)?;
    let reg = regressors(ds, &design)?;
    let first = design.origins[0];
    if let Some(&bad) = lags.iter().find(|&&l| l == 0 || l > first) {
        return Err(Error::InvalidParameter(format!(
            "placebo lag {bad} must lie in 1..={first} for this design"
        )));
    }
    let variables = std::iter::once(&ds.outcome)
        .chain(&ds.treatments)
        .chain(&ds.controls);
    let mut out = Vec::new();
    for s in variables {
        for &lag in lags {
            let mut dep: Vec<f64> = design.origins.iter().map(|&t| s.values[t - lag]).collect();
            zscore(&mut dep, &s.name)?;
            out.push(PlaceboRow {
                variable: s.name.clone(),
                lag,
                relevance: relevance(&DVector::from_vec(dep), &reg.instruments, &reg.controls)?,
            });
        }
    }
    Ok(out)
}

/// Full estimation pipeline on the pre-treatment outcomes
/// `y_{t−max_lead}, ..., y_{t−1}` in the level specification.
pub fn lead_placebo(
    ds: &Dataset,
    cfg: &SpecConfig,
    max_lead: usize,
    estimator: Estimator,
    est: &EstimationConfig,
) -> Result<IrfResult> {
    let design = build_lead_design(ds, cfg, max_lead)?;
    Ok(estimate(&design, estimator, est)?.irf)
}

#[derive(Serialize)]
struct RelevanceRecord<'a> {
    variable: &'a str,
    lag: usize,
    instrument: &'a str,
    coefficient: f64,
    partial_r2: f64,
    wald: f64,
    df: usize,
    p_value: f64,
}

fn write_relevance<'a>(
    path: &Path,
    instruments: &[String],
    rows: impl Iterator<Item = (&'a str, usize, &'a Relevance)>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (variable, lag, rel) in rows {
        for (name, b) in instruments.iter().zip(&rel.coefficients) {
            w.serialize(RelevanceRecord {
                variable,
                lag,
                instrument: name,
                coefficient: *b,
                partial_r2: rel.partial_r2,
                wald: rel.wald,
                df: rel.df,
                p_value: rel.p_value,
            })?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// One row per (treatment, instrument), followed by a row holding the
/// smallest singular value of the coefficient matrix.
pub fn write_first_stage_csv(report: &FirstStageReport, path: &Path) -> Result<()> {
    write_relevance(
        path,
        &report.instruments,
        report.rows.iter().map(|r| (r.treatment.as_str(), 0, &r.relevance)),
    )?;
    let mut f = std::fs::OpenOptions::new()
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    use std::io::Write;
    writeln!(
        f,
        "smallest_singular_value,0,all,{},,,,",
        report.smallest_singular_value
    )
    .map_err(|e| Error::io(path, e))
}

pub fn write_placebo_csv(rows: &[PlaceboRow], instruments: &[String], path: &Path) -> Result<()> {
    write_relevance(
        path,
        instruments,
        rows.iter().map(|r| (r.variable.as_str(), r.lag, &r.relevance)),
    )
}
