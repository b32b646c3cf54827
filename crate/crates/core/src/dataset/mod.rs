//! Aligned daily time series: validation, standardization and calendar features.

mod calendar;
mod load;

pub use calendar::{
    day_of_week_indicators, fourier_features, within_year_position, CalendarFeatures, DAY_OF_WEEK_NAMES,
};
pub use load::{load_csv, Schema};

use chrono::NaiveDate;

use crate::error::{Error, Result};

/// A named numeric column.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
}

impl Series {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Series {
            name: name.into(),
            values,
        }
    }
}

/// Mean and standard deviation removed from a series during standardization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaling {
    pub mean: f64,
    pub sd: f64,
}

impl Scaling {
    pub fn restore(&self, standardized: &[f64]) -> Vec<f64> {
        standardized.iter().map(|z| z * self.sd + self.mean).collect()
    }
}

/// Output of [`standardize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Standardized {
    pub values: Vec<f64>,
    pub scaling: Scaling,
}

/// Center and scale a series to sample mean 0 and sample variance 1
/// (denominator `T - 1`).
pub fn standardize(series: &[f64]) -> Result<Standardized> {
    let n = series.len();
    if n < 2 {
        return Err(Error::TooShort { needed: 2, got: n });
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let var = series.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    if !(var > 0.0) || !var.is_finite() {
        return Err(Error::ZeroVariance(String::new()));
    }
    let sd = var.sqrt();
    Ok(Standardized {
        values: series.iter().map(|x| (x - mean) / sd).collect(),
        scaling: Scaling { mean, sd },
    })
}

/// Validated, aligned daily dataset.
///
/// Treatments and continuous controls are standardized by
/// [`Dataset::standardized`]; the outcome, the instruments and the 0/1
/// indicators keep their original units.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub dates: Vec<NaiveDate>,
    pub outcome: Series,
    pub treatments: Vec<Series>,
    pub instruments: Vec<Series>,
    pub controls: Vec<Series>,
    pub indicators: Vec<Series>,
    /// Constants removed by standardization, keyed by series name.
    pub scalings: Vec<(String, Scaling)>,
}

impl Dataset {
    pub fn new(
        dates: Vec<NaiveDate>,
        outcome: Series,
        treatments: Vec<Series>,
        instruments: Vec<Series>,
        controls: Vec<Series>,
        indicators: Vec<Series>,
    ) -> Result<Self> {
        let ds = Dataset {
            dates,
            outcome,
            treatments,
            instruments,
            controls,
            indicators,
            scalings: Vec::new(),
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    fn all_series(&self) -> impl Iterator<Item = &Series> {
        std::iter::once(&self.outcome)
            .chain(&self.treatments)
            .chain(&self.instruments)
            .chain(&self.controls)
            .chain(&self.indicators)
    }

    fn validate(&self) -> Result<()> {
        if self.treatments.is_empty() || self.treatments.len() != self.instruments.len() {
            return Err(Error::IdentificationCount {
                treatments: self.treatments.len(),
                instruments: self.instruments.len(),
            });
        }
        let n = self.dates.len();
        for s in self.all_series() {
            if s.values.len() != n {
                return Err(Error::LengthMismatch(format!(
                    "`{}` has {} values, dates have {n}",
                    s.name,
                    s.values.len()
                )));
            }
            if let Some(row) = s.values.iter().position(|v| !v.is_finite()) {
                return Err(Error::MissingValue {
                    row,
                    column: s.name.clone(),
                });
            }
        }
        validate_daily(&self.dates)
    }

    /// Standardize treatments and continuous controls over the full sample.
    pub fn standardized(mut self) -> Result<Self> {
        let mut scalings = Vec::new();
        for s in self.treatments.iter_mut().chain(self.controls.iter_mut()) {
            let st = standardize(&s.values).map_err(|e| match e {
                Error::ZeroVariance(_) => Error::ZeroVariance(s.name.clone()),
                other => other,
            })?;
            s.values = st.values;
            scalings.push((s.name.clone(), st.scaling));
        }
        self.scalings = scalings;
        Ok(self)
    }

    pub fn scaling(&self, name: &str) -> Option<Scaling> {
        self.scalings
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| *s)
    }

    /// Look up any column by name.
    pub fn series(&self, name: &str) -> Option<&Series> {
        self.all_series().find(|s| s.name == name)
    }
}

/// Dates must be strictly increasing with exactly one day between neighbours.
pub fn validate_daily(dates: &[NaiveDate]) -> Result<()> {
    for w in dates.windows(2) {
        if (w[1] - w[0]).num_days() != 1 {
            return Err(Error::DateGap {
                prev: w[0].to_string(),
                next: w[1].to_string(),
            });
        }
    }
    Ok(())
}

/// `n` consecutive days starting at `start`.
pub fn daily_dates(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    start.iter_days().take(n).collect()
}
