//! Horizon-stacked LP-IV regression system.
//!
//! Row `t` of the design corresponds to one projection origin. Columns of
//! `X` are ordered (treatments, intercept, outcome lags, Fourier sines,
//! Fourier cosines, controls); `Z` is `X` with the instruments in place of
//! the treatments. Column `h` of `Y` holds the horizon-`h` dependent
//! variable. Coefficients are stacked horizon-major, so covariate `j` at
//! horizon index `h` lives at `h * J + j`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataset::{day_of_week_indicators, fourier_features, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpecKind {
    /// `y_{t+h}` on `r_t`, intercept and `y_{t-1..t-L}`.
    Level,
    /// `y_{t+h} - y_{t-1}` on `r_t`, intercept and `Δy_{t-1..t-L}`.
    Ld,
}

impl std::str::FromStr for SpecKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "level" => Ok(SpecKind::Level),
            "ld" => Ok(SpecKind::Ld),
            other => Err(Error::Config(format!("unknown spec `{other}` (level|ld)"))),
        }
    }
}

impl std::fmt::Display for SpecKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SpecKind::Level => "level",
            SpecKind::Ld => "ld",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecConfig {
    pub kind: SpecKind,
    /// Maximum horizon `H`.
    pub horizons: usize,
    /// Number of outcome lags `L`.
    pub lags: usize,
    /// Number of Fourier harmonics `N`.
    pub fourier: usize,
    /// Append Tuesday..Sunday indicators to the controls.
    pub day_of_week: bool,
}

impl Default for SpecConfig {
    fn default() -> Self {
        SpecConfig {
            kind: SpecKind::Ld,
            horizons: 7,
            lags: 7,
            fourier: 4,
            day_of_week: true,
        }
    }
}

/// First and last usable projection origin (0-based, inclusive).
pub fn trim_bounds(raw_length: usize, lags: usize, horizons: usize, kind: SpecKind) -> Result<(usize, usize)> {
    if raw_length <= lags + horizons + 1 {
        return Err(Error::InsufficientData {
            raw: raw_length,
            lags,
            horizons,
        });
    }
    let first = match kind {
        SpecKind::Level => lags,
        SpecKind::Ld => lags + 1,
    };
    Ok((first, raw_length - 1 - horizons))
}

#[derive(Debug, Clone)]
pub struct LpDesign {
    pub x: DMatrix<f64>,
    pub z: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub kind: SpecKind,
    /// Dataset row index of each projection origin.
    pub origins: Vec<usize>,
    /// Offset of each dependent-variable column relative to the origin
    /// (`0..=H` for impulse responses, negative for lead placebos).
    pub horizons: Vec<i64>,
    pub column_names: Vec<String>,
    pub treatment_names: Vec<String>,
}

impl LpDesign {
    /// Trimmed sample size `T`.
    pub fn t(&self) -> usize {
        self.x.nrows()
    }
    /// Regressors per horizon `J`.
    pub fn j(&self) -> usize {
        self.x.ncols()
    }
    /// Number of stacked horizons (`H + 1` for impulse responses).
    pub fn n_horizons(&self) -> usize {
        self.y.ncols()
    }
    /// Stacked dimension `K = J (H + 1)`.
    pub fn k(&self) -> usize {
        self.j() * self.n_horizons()
    }
    pub fn n_treatments(&self) -> usize {
        self.treatment_names.len()
    }
    pub fn coord(&self, horizon_idx: usize, covariate: usize) -> usize {
        debug_assert!(horizon_idx < self.n_horizons() && covariate < self.j());
        horizon_idx * self.j() + covariate
    }
    pub fn position(&self, coord: usize) -> (usize, usize) {
        (coord / self.j(), coord % self.j())
    }
    /// Stacked coordinates of treatment `i` across all horizons.
    pub fn treatment_coords(&self, treatment: usize) -> Vec<usize> {
        (0..self.n_horizons()).map(|h| self.coord(h, treatment)).collect()
    }
}

/// Build the stacked impulse-response design for horizons `0..=H`.
pub fn build_design(ds: &Dataset, cfg: &SpecConfig) -> Result<LpDesign> {
    trim_bounds(ds.len(), cfg.lags, cfg.horizons, cfg.kind)?;
    let offsets: Vec<i64> = (0..=cfg.horizons as i64).collect();
    build_with_offsets(ds, cfg, &offsets, 0)
}

/// Level-specification design whose dependent variables are the
/// pre-treatment values `y_{t-max_lead}, ..., y_{t-1}`.
///
/// The outcome-lag controls start below the deepest lead
/// (`y_{t-max_lead-1}, ..., y_{t-max_lead-L}`) so no dependent variable is
/// also a regressor.
pub fn build_lead_design(ds: &Dataset, cfg: &SpecConfig, max_lead: usize) -> Result<LpDesign> {
    if max_lead == 0 {
        return Err(Error::InvalidParameter("lead range must be at least 1".into()));
    }
    let level = SpecConfig {
        kind: SpecKind::Level,
        ..cfg.clone()
    };
    let offsets: Vec<i64> = (1..=max_lead as i64).rev().map(|l| -l).collect();
    build_with_offsets(ds, &level, &offsets, max_lead)
}

fn build_with_offsets(ds: &Dataset, cfg: &SpecConfig, offsets: &[i64], lag_shift: usize) -> Result<LpDesign> {
    let n = ds.len();
    let y = &ds.outcome.values;
    let min_off = offsets.iter().copied().min().unwrap_or(0).min(0);
    let max_off = offsets.iter().copied().max().unwrap_or(0).max(0) as usize;
    let extra = usize::from(cfg.kind == SpecKind::Ld);
    let first = (lag_shift + cfg.lags + extra).max((-min_off) as usize).max(extra);
    if n < max_off + 1 || first > n - 1 - max_off {
        return Err(Error::InsufficientData {
            raw: n,
            lags: cfg.lags,
            horizons: offsets.len().saturating_sub(1),
        });
    }
    let last = n - 1 - max_off;
    let origins: Vec<usize> = (first..=last).collect();

    let nt = ds.treatments.len();
    let cal = fourier_features(&ds.dates, cfg.fourier);
    let dow = if cfg.day_of_week {
        day_of_week_indicators(&ds.dates)
    } else {
        Vec::new()
    };

    let mut names: Vec<String> = ds.treatments.iter().map(|s| s.name.clone()).collect();
    let mut shared: Vec<Vec<f64>> = Vec::new();
    names.push("const".into());
    shared.push(vec![1.0; origins.len()]);
    for l in 1..=cfg.lags {
        let back = lag_shift + l;
        let col = origins
            .iter()
            .map(|&t| match cfg.kind {
                SpecKind::Level => y[t - back],
                SpecKind::Ld => y[t - back] - y[t - back - 1],
            })
            .collect();
        names.push(match cfg.kind {
            SpecKind::Level => format!("y_lag{back}"),
            SpecKind::Ld => format!("dy_lag{back}"),
        });
        shared.push(col);
    }
    let pick = |col: &[f64]| -> Vec<f64> { origins.iter().map(|&t| col[t]).collect() };
    for (i, col) in cal.sin.iter().enumerate() {
        names.push(format!("sin{}", i + 1));
        shared.push(pick(col));
    }
    for (i, col) in cal.cos.iter().enumerate() {
        names.push(format!("cos{}", i + 1));
        shared.push(pick(col));
    }
    for s in &ds.controls {
        names.push(s.name.clone());
        shared.push(pick(&s.values));
    }
    for (name, col) in crate::dataset::DAY_OF_WEEK_NAMES.iter().zip(&dow) {
        names.push((*name).to_string());
        shared.push(pick(col));
    }
    for s in &ds.indicators {
        names.push(s.name.clone());
        shared.push(pick(&s.values));
    }

    let t_len = origins.len();
    let j = nt + shared.len();
    if t_len <= j {
        return Err(Error::TooFewOrigins { t: t_len, j });
    }
    let mut x = DMatrix::zeros(t_len, j);
    let mut z = DMatrix::zeros(t_len, j);
    for (row, &t) in origins.iter().enumerate() {
        for i in 0..nt {
            x[(row, i)] = ds.treatments[i].values[t];
            z[(row, i)] = ds.instruments[i].values[t];
        }
        for (c, col) in shared.iter().enumerate() {
            x[(row, nt + c)] = col[row];
            z[(row, nt + c)] = col[row];
        }
    }
    let mut ymat = DMatrix::zeros(t_len, offsets.len());
    for (row, &t) in origins.iter().enumerate() {
        for (h, &o) in offsets.iter().enumerate() {
            let target = (t as i64 + o) as usize;
            ymat[(row, h)] = match cfg.kind {
                SpecKind::Level => y[target],
                SpecKind::Ld => y[target] - y[t - 1],
            };
        }
    }
    if x.iter().chain(z.iter()).chain(ymat.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("design contains non-finite values".into()));
    }
    Ok(LpDesign {
        x,
        z,
        y: ymat,
        kind: cfg.kind,
        origins,
        horizons: offsets.to_vec(),
        column_names: names,
        treatment_names: ds.treatments.iter().map(|s| s.name.clone()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{daily_dates, Series};
    use chrono::NaiveDate;

    pub(crate) fn toy_dataset(n: usize) -> Dataset {
        let dates = daily_dates(NaiveDate::from_ymd_opt(2019, 12, 25).unwrap(), n);
        let y: Vec<f64> = (0..n).map(|t| ((t * t) % 17) as f64 + 0.1 * t as f64).collect();
        let r: Vec<f64> = (0..n).map(|t| ((t * 7) % 11) as f64).collect();
        let z: Vec<f64> = (0..n).map(|t| ((t * 5) % 13) as f64).collect();
        let c: Vec<f64> = (0..n).map(|t| (t as f64 * 0.3).sin()).collect();
        Dataset::new(
            dates,
            Series::new("y", y),
            vec![Series::new("r", r)],
            vec![Series::new("z", z)],
            vec![Series::new("c", c)],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn trim_examples() {
        assert_eq!(trim_bounds(20, 2, 3, SpecKind::Level).unwrap(), (2, 16));
        assert_eq!(trim_bounds(20, 2, 3, SpecKind::Ld).unwrap(), (3, 16));
        assert!(matches!(
            trim_bounds(5, 3, 3, SpecKind::Level),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn ld_design_contents() {
        let ds = toy_dataset(60);
        let cfg = SpecConfig {
            kind: SpecKind::Ld,
            horizons: 3,
            lags: 2,
            fourier: 1,
            day_of_week: true,
        };
        let d = build_design(&ds, &cfg).unwrap();
        let y = &ds.outcome.values;
        assert_eq!(d.origins.first(), Some(&3));
        assert_eq!(d.origins.last(), Some(&56));
        assert_eq!(d.j(), 1 + 1 + 2 + 2 + 1 + 6);
        assert_eq!(d.k(), d.j() * 4);
        for (row, &t) in d.origins.iter().enumerate() {
            assert_eq!(d.y[(row, 0)], y[t] - y[t - 1]);
            for h in 0..4 {
                // reconstruct the level from the long difference
                assert!((d.y[(row, h)] + y[t - 1] - y[t + h]).abs() < 1e-12);
            }
            assert_eq!(d.x[(row, 2)], y[t - 1] - y[t - 2]);
            assert_eq!(d.x[(row, 3)], y[t - 2] - y[t - 3]);
            assert_eq!(d.x[(row, 0)], ds.treatments[0].values[t]);
            assert_eq!(d.z[(row, 0)], ds.instruments[0].values[t]);
        }
        let differing: Vec<usize> = (0..d.j())
            .filter(|&c| d.x.column(c) != d.z.column(c))
            .collect();
        assert_eq!(differing, vec![0]);
        assert_eq!(&d.column_names[..4], &["r", "const", "dy_lag1", "dy_lag2"]);
    }

    #[test]
    fn level_design_targets() {
        let ds = toy_dataset(40);
        let cfg = SpecConfig {
            kind: SpecKind::Level,
            horizons: 2,
            lags: 1,
            fourier: 0,
            day_of_week: false,
        };
        let d = build_design(&ds, &cfg).unwrap();
        assert_eq!(d.origins[0], 1);
        for (row, &t) in d.origins.iter().enumerate() {
            for h in 0..3 {
                assert_eq!(d.y[(row, h)], ds.outcome.values[t + h]);
            }
            assert_eq!(d.x[(row, 2)], ds.outcome.values[t - 1]);
        }
    }

    #[test]
    fn index_map_is_a_bijection() {
        let ds = toy_dataset(50);
        let d = build_design(
            &ds,
            &SpecConfig {
                kind: SpecKind::Ld,
                horizons: 4,
                lags: 1,
                fourier: 0,
                day_of_week: false,
            },
        )
        .unwrap();
        let mut seen = vec![false; d.k()];
        for h in 0..d.n_horizons() {
            for j in 0..d.j() {
                let k = d.coord(h, j);
                assert!(!seen[k]);
                seen[k] = true;
                assert_eq!(d.position(k), (h, j));
            }
        }
        assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn lead_design_avoids_mechanical_fit() {
        let ds = toy_dataset(60);
        let cfg = SpecConfig {
            kind: SpecKind::Ld,
            horizons: 7,
            lags: 2,
            fourier: 0,
            day_of_week: false,
        };
        let d = build_lead_design(&ds, &cfg, 3).unwrap();
        assert_eq!(d.kind, SpecKind::Level);
        assert_eq!(d.horizons, vec![-3, -2, -1]);
        assert_eq!(d.origins[0], 5);
        for (row, &t) in d.origins.iter().enumerate() {
            assert_eq!(d.y[(row, 0)], ds.outcome.values[t - 3]);
            assert_eq!(d.y[(row, 2)], ds.outcome.values[t - 1]);
            assert_eq!(d.x[(row, 2)], ds.outcome.values[t - 4]);
        }
    }

    #[test]
    fn too_few_origins_for_regressors() {
        let ds = toy_dataset(14);
        let cfg = SpecConfig {
            kind: SpecKind::Ld,
            horizons: 1,
            lags: 2,
            fourier: 2,
            day_of_week: true,
        };
        assert!(matches!(build_design(&ds, &cfg), Err(Error::TooFewOrigins { .. })));
    }
}
