//! Renewable-potential instruments from gridded weather.
//!
//! Hourly 100m wind components become wind speed, then capacity factor via
//! a cubic turbine power curve; hourly surface solar radiation is summed per
//! day. Cell-level daily potentials are combined into zone series with
//! installed-capacity weights.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerCurveParams {
    pub cut_in: f64,
    pub rated: f64,
    pub cut_out: f64,
}

impl Default for PowerCurveParams {
    fn default() -> Self {
        PowerCurveParams {
            cut_in: 3.0,
            rated: 13.0,
            cut_out: 25.0,
        }
    }
}

impl PowerCurveParams {
    pub fn validate(&self) -> Result<()> {
        if 0.0 < self.cut_in && self.cut_in < self.rated && self.rated < self.cut_out {
            Ok(())
        } else {
            Err(Error::InvalidParameter(
                "power curve needs 0 < cut_in < rated < cut_out".into(),
            ))
        }
    }
}

pub fn wind_speed(u: f64, v: f64) -> f64 {
    u.hypot(v)
}

/// Capacity factor in `[0, 1]`: zero below cut-in, cubic ramp up to rated,
/// one until cut-out, zero at and above cut-out.
pub fn power_curve(ws: f64, p: &PowerCurveParams) -> f64 {
    if ws < p.cut_in || ws >= p.cut_out {
        0.0
    } else if ws < p.rated {
        let lo = p.cut_in.powi(3);
        (ws.powi(3) - lo) / (p.rated.powi(3) - lo)
    } else {
        1.0
    }
}

fn check_hours(day: &str, n: usize) -> Result<()> {
    if n == 24 {
        Ok(())
    } else {
        Err(Error::HourCount {
            day: day.to_string(),
            got: n,
        })
    }
}

/// Mean of 24 hourly capacity factors.
pub fn daily_wind_potential(hourly: &[f64]) -> Result<f64> {
    check_hours("day", hourly.len())?;
    Ok(hourly.iter().sum::<f64>() / 24.0)
}

/// Sum of 24 non-negative hourly radiation values.
pub fn daily_solar_potential(hourly: &[f64]) -> Result<f64> {
    check_hours("day", hourly.len())?;
    if let Some(v) = hourly.iter().find(|v| **v < 0.0) {
        return Err(Error::NegativeRadiation(*v));
    }
    Ok(hourly.iter().sum())
}

/// `w_i = c_i / Σ_j c_j`.
pub fn capacity_weights(capacities: &[f64]) -> Result<Vec<f64>> {
    if let Some(c) = capacities.iter().find(|c| !(**c >= 0.0)) {
        return Err(Error::InvalidParameter(format!("capacity must be non-negative, got {c}")));
    }
    let total: f64 = capacities.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroCapacity(String::new()));
    }
    Ok(capacities.iter().map(|c| c / total).collect())
}

/// Pointwise weighted sum of cell series.
pub fn zone_aggregate(cells: &[Vec<f64>], weights: &[f64]) -> Result<Vec<f64>> {
    if cells.len() != weights.len() {
        return Err(Error::LengthMismatch(format!(
            "{} cell series but {} weights",
            cells.len(),
            weights.len()
        )));
    }
    let Some(n) = cells.first().map(Vec::len) else {
        return Ok(Vec::new());
    };
    if cells.iter().any(|c| c.len() != n) {
        return Err(Error::LengthMismatch("cell series have different lengths".into()));
    }
    Ok((0..n)
        .map(|t| cells.iter().zip(weights).map(|(c, w)| w * c[t]).sum())
        .collect())
}

#[derive(Debug, Clone, Deserialize)]
struct HourlyRecord {
    cell_id: String,
    timestamp: String,
    u100: f64,
    v100: f64,
    ssr: f64,
}

#[derive(Debug, Clone, Deserialize)]
struct CapacityRecord {
    cell_id: String,
    #[serde(default = "default_zone")]
    zone: String,
    wind_mw: f64,
    solar_mw: f64,
}

fn default_zone() -> String {
    "all".into()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZonePotential {
    pub date: String,
    pub zone: String,
    pub wind_potential: f64,
    pub solar_potential: f64,
}

/// Hourly capacity factors and radiation for one cell-day.
type HourlyDay = (Vec<f64>, Vec<f64>);

fn parse_timestamp(raw: &str) -> Option<NaiveDateTime> {
    const FORMATS: [&str; 4] = ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M:%S", "%Y-%m-%d %H:%M"];
    FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(raw.trim(), f).ok())
}

/// Build zone-level daily potentials from a long hourly weather table
/// (`cell_id,timestamp,u100,v100,ssr`) and a capacity table
/// (`cell_id,zone,wind_mw,solar_mw`).
///
/// Days are the calendar dates of the given timestamps; each cell needs
/// exactly 24 rows per date. Cells absent from the capacity table are
/// ignored; cells listed there must have weather for every date.
pub fn zone_potentials_from_csv(
    weather: &Path,
    capacity: &Path,
    curve: &PowerCurveParams,
) -> Result<Vec<ZonePotential>> {
    curve.validate()?;
    let mut caps: Vec<CapacityRecord> = Vec::new();
    for rec in csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(capacity)?
        .deserialize()
    {
        caps.push(rec?);
    }
    if caps.is_empty() {
        return Err(Error::ZeroCapacity(format!(" (no rows in {})", capacity.display())));
    }

    let mut hourly: BTreeMap<String, BTreeMap<NaiveDate, HourlyDay>> = BTreeMap::new();
    for (row, rec) in csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(weather)?
        .deserialize::<HourlyRecord>()
        .enumerate()
    {
        let rec = rec?;
        let ts = parse_timestamp(&rec.timestamp).ok_or_else(|| Error::BadDate {
            row,
            value: rec.timestamp.clone(),
        })?;
        if !(rec.u100.is_finite() && rec.v100.is_finite() && rec.ssr.is_finite()) {
            return Err(Error::MissingValue {
                row,
                column: "u100/v100/ssr".into(),
            });
        }
        let entry = hourly.entry(rec.cell_id).or_default().entry(ts.date()).or_default();
        entry.0.push(power_curve(wind_speed(rec.u100, rec.v100), curve));
        entry.1.push(rec.ssr);
    }

    let mut daily: BTreeMap<&str, BTreeMap<NaiveDate, (f64, f64)>> = BTreeMap::new();
    for (cell, days) in &hourly {
        let mut out = BTreeMap::new();
        for (date, (q, ssr)) in days {
            let label = format!("{cell} {date}");
            check_hours(&label, q.len())?;
            out.insert(*date, (daily_wind_potential(q)?, daily_solar_potential(ssr)?));
        }
        daily.insert(cell.as_str(), out);
    }

    let mut zones: BTreeMap<&str, Vec<&CapacityRecord>> = BTreeMap::new();
    for c in &caps {
        zones.entry(c.zone.as_str()).or_default().push(c);
    }
    let mut result = Vec::new();
    for (zone, members) in zones {
        let mut series_wind = Vec::new();
        let mut series_solar = Vec::new();
        let mut dates: Option<Vec<NaiveDate>> = None;
        for m in &members {
            let cell = daily
                .get(m.cell_id.as_str())
                .ok_or_else(|| Error::MissingColumn(format!("weather for cell `{}`", m.cell_id)))?;
            let these: Vec<NaiveDate> = cell.keys().copied().collect();
            match &dates {
                None => dates = Some(these),
                Some(d) if *d != these => {
                    return Err(Error::LengthMismatch(format!(
                        "cell `{}` covers different dates than other cells in zone `{zone}`",
                        m.cell_id
                    )))
                }
                _ => {}
            }
            series_wind.push(cell.values().map(|v| v.0).collect::<Vec<_>>());
            series_solar.push(cell.values().map(|v| v.1).collect::<Vec<_>>());
        }
        let zone_err = |e: Error| match e {
            Error::ZeroCapacity(_) => Error::ZeroCapacity(format!(" in zone `{zone}`")),
            other => other,
        };
        let ww = capacity_weights(&members.iter().map(|m| m.wind_mw).collect::<Vec<_>>()).map_err(zone_err)?;
        let ws = capacity_weights(&members.iter().map(|m| m.solar_mw).collect::<Vec<_>>()).map_err(zone_err)?;
        let wind = zone_aggregate(&series_wind, &ww)?;
        let solar = zone_aggregate(&series_solar, &ws)?;
        for (i, d) in dates.unwrap_or_default().iter().enumerate() {
            result.push(ZonePotential {
                date: d.to_string(),
                zone: zone.to_string(),
                wind_potential: wind[i],
                solar_potential: solar[i],
            });
        }
    }
    Ok(result)
}

pub fn write_potentials_csv(rows: &[ZonePotential], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
