use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{Dataset, Series};
use crate::error::{Error, Result};

/// Column roles for [`load_csv`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub date: String,
    pub outcome: String,
    pub treatments: Vec<String>,
    pub instruments: Vec<String>,
    /// Continuous controls; standardized when `standardize` is set.
    #[serde(default)]
    pub controls: Vec<String>,
    /// 0/1 event indicators, used as-is.
    #[serde(default)]
    pub indicators: Vec<String>,
    #[serde(default = "yes")]
    pub standardize: bool,
}

fn yes() -> bool {
    true
}

impl Schema {
    pub fn check(&self) -> Result<()> {
        if self.treatments.is_empty() || self.treatments.len() != self.instruments.len() {
            return Err(Error::IdentificationCount {
                treatments: self.treatments.len(),
                instruments: self.instruments.len(),
            });
        }
        Ok(())
    }
}

fn parse_value(raw: &str, row: usize, column: &str) -> Result<f64> {
    let missing = || Error::MissingValue {
        row,
        column: column.to_string(),
    };
    let v: f64 = raw.trim().parse().map_err(|_| missing())?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(missing())
    }
}

/// Read a header-bearing CSV with an ISO-8601 date column and numeric columns.
///
/// Rows with any missing required value are an error; nothing is imputed.
/// Treatments and controls are standardized over the full loaded sample
/// when `schema.standardize` is set.
pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let path = path.as_ref();
    schema.check()?;
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = rdr.headers()?.clone();
    let index_of = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let date_idx = index_of(&schema.date)?;
    let groups: [&[String]; 5] = [
        std::slice::from_ref(&schema.outcome),
        &schema.treatments,
        &schema.instruments,
        &schema.controls,
        &schema.indicators,
    ];
    let mut columns: Vec<Vec<(String, usize)>> = Vec::new();
    for g in groups {
        columns.push(
            g.iter()
                .map(|n| Ok((n.clone(), index_of(n)?)))
                .collect::<Result<_>>()?,
        );
    }

    let mut dates = Vec::new();
    let mut values: Vec<Vec<Vec<f64>>> = columns
        .iter()
        .map(|g| vec![Vec::new(); g.len()])
        .collect();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let raw = rec.get(date_idx).unwrap_or("");
        let date = NaiveDate::parse_from_str(raw, "%Y-%m-%d").map_err(|_| Error::BadDate {
            row,
            value: raw.to_string(),
        })?;
        dates.push(date);
        for (g, cols) in columns.iter().enumerate() {
            for (k, (name, idx)) in cols.iter().enumerate() {
                let v = parse_value(rec.get(*idx).unwrap_or(""), row, name)?;
                values[g][k].push(v);
            }
        }
    }

    let mut groups = columns.into_iter().zip(values).map(|(cols, vals)| {
        cols.into_iter()
            .zip(vals)
            .map(|((name, _), v)| Series::new(name, v))
            .collect::<Vec<_>>()
    });
    let outcome = groups.next().unwrap().pop().unwrap();
    let treatments = groups.next().unwrap();
    let instruments = groups.next().unwrap();
    let controls = groups.next().unwrap();
    let indicators = groups.next().unwrap();
    let ds = Dataset::new(dates, outcome, treatments, instruments, controls, indicators)?;
    if schema.standardize {
        ds.standardized()
    } else {
        Ok(ds)
    }
}
