//! Synthetic electricity-market data for offline demos and tests.
//!
//! A daily panel with a price outcome, wind and solar generation as
//! endogenous treatments, their weather potentials as instruments, load and
//! temperature controls and a Danish public-holiday indicator. Generation
//! and price share a demand shock, so OLS on generation is biased while the
//! potentials are valid instruments.
//!
//! The price equation is
//! `p_t = c + φ p_{t−1} − β_w g^w_t − β_s g^s_t + controls + u_t + e_t`
//! with generation in GW, so the response of price to a 1 GW wind shock at
//! horizon `h` is `−β_w φ^h`.

use std::path::Path;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{daily_dates, within_year_position, Dataset, Schema, Series};
use crate::error::{Error, Result};
use crate::rng::stream_rng;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticParams {
    pub start: NaiveDate,
    pub days: usize,
    pub seed: u64,
    /// Price persistence φ.
    pub phi: f64,
    /// €/MWh price drop per GW of wind.
    pub beta_wind: f64,
    /// €/MWh price drop per GW of solar.
    pub beta_solar: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams {
            start: NaiveDate::from_ymd_opt(2015, 1, 1).expect("valid date"),
            days: 1096,
            seed: 20150101,
            phi: 0.6,
            beta_wind: 8.0,
            beta_solar: 5.0,
        }
    }
}

/// Columns in file order, after `date`.
pub const COLUMNS: [&str; 8] = [
    "price",
    "wind_gen",
    "solar_gen",
    "wind_pot",
    "solar_pot",
    "load",
    "temperature",
    "holiday",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTable {
    pub dates: Vec<NaiveDate>,
    /// One vector per entry of [`COLUMNS`].
    pub columns: Vec<Vec<f64>>,
    pub params: SyntheticParams,
}

/// Easter Sunday (anonymous Gregorian algorithm).
pub fn easter(year: i32) -> NaiveDate {
    let a = year % 19;
    let b = year / 100;
    let c = year % 100;
    let d = b / 4;
    let e = b % 4;
    let f = (b + 8) / 25;
    let g = (b - f + 1) / 3;
    let h = (19 * a + b - d - g + 15) % 30;
    let i = c / 4;
    let k = c % 4;
    let l = (32 + 2 * e + 2 * i - h - k) % 7;
    let m = (a + 11 * h + 22 * l) / 451;
    let month = (h + l - 7 * m + 114) / 31;
    let day = (h + l - 7 * m + 114) % 31 + 1;
    NaiveDate::from_ymd_opt(year, month as u32, day as u32).expect("valid Easter date")
}

/// Danish public holidays plus Christmas Eve and New Year's Eve.
/// Great Prayer Day is included through 2023.
pub fn danish_holidays(year: i32) -> Vec<NaiveDate> {
    let e = easter(year);
    let shift = |d: i64| {
        if d >= 0 {
            e.checked_add_days(Days::new(d as u64))
        } else {
            e.checked_sub_days(Days::new((-d) as u64))
        }
        .expect("date in range")
    };
    let fixed = |m, d| NaiveDate::from_ymd_opt(year, m, d).expect("valid date");
    let mut out = vec![fixed(1, 1), shift(-3), shift(-2), e, shift(1)];
    if year <= 2023 {
        out.push(shift(26));
    }
    out.extend([
        shift(39),
        shift(49),
        shift(50),
        fixed(6, 5),
        fixed(12, 24),
        fixed(12, 25),
        fixed(12, 26),
        fixed(12, 31),
    ]);
    out.sort();
    out
}

struct Ar1 {
    phi: f64,
    state: f64,
    shock: Normal<f64>,
}

impl Ar1 {
    fn new(phi: f64, innovation_sd: f64) -> Self {
        Ar1 {
            phi,
            state: 0.0,
            shock: Normal::new(0.0, innovation_sd).expect("valid sd"),
        }
    }

    fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        self.state = self.phi * self.state + self.shock.sample(rng);
        self.state
    }
}

pub fn generate_synthetic(params: &SyntheticParams) -> Result<SyntheticTable> {
    if params.days < 30 {
        return Err(Error::TooShort {
            needed: 30,
            got: params.days,
        });
    }
    if !(params.phi.abs() < 1.0) {
        return Err(Error::InvalidParameter("price persistence must satisfy |phi| < 1".into()));
    }
    let mut rng = stream_rng(params.seed, 0);
    let dates = daily_dates(params.start, params.days);
    let mut holidays = Vec::new();
    for y in dates[0].year()..=dates[dates.len() - 1].year() {
        holidays.extend(danish_holidays(y));
    }
    let unit = Normal::new(0.0, 1.0).expect("valid sd");

    let mut temp_noise = Ar1::new(0.8, 1.5);
    let mut wind_state = Ar1::new(0.7, 0.9);
    let mut cloud_state = Ar1::new(0.6, 0.6);
    let mut demand = Ar1::new(0.3, 1.0);
    let burn = 100;
    for _ in 0..burn {
        temp_noise.step(&mut rng);
        wind_state.step(&mut rng);
        cloud_state.step(&mut rng);
        demand.step(&mut rng);
    }

    let mut cols = vec![Vec::with_capacity(params.days); COLUMNS.len()];
    let mut price_prev = 40.0;
    for &d in &dates {
        let angle = 2.0 * std::f64::consts::PI * within_year_position(d);
        let winter = angle.cos();
        let holiday = f64::from(u8::from(holidays.binary_search(&d).is_ok()));
        let weekend = matches!(d.weekday(), Weekday::Sat | Weekday::Sun);

        let temperature = 9.0 - 8.0 * winter + temp_noise.step(&mut rng);
        let wind_pot = 1.0 / (1.0 + (-(-0.7 + 0.5 * winter + wind_state.step(&mut rng))).exp());
        let clear_sky = 3.8 - 3.2 * winter;
        let solar_pot = clear_sky / (1.0 + (-(0.8 + cloud_state.step(&mut rng))).exp());

        let u = demand.step(&mut rng);
        let load = 4.0 + 0.5 * winter - 0.4 * f64::from(u8::from(weekend)) - 0.5 * holiday
            - 0.02 * (temperature - 9.0)
            + 0.15 * u
            + 0.05 * unit.sample(&mut rng);
        // GW; curtailment and must-run respond to the demand shock
        let wind_gen = (4.5 * wind_pot + 0.12 * u + 0.15 * unit.sample(&mut rng)).max(0.0);
        let solar_gen = (0.25 * solar_pot + 0.03 * u + 0.04 * unit.sample(&mut rng)).max(0.0);

        let price = 30.0 + params.phi * price_prev - params.beta_wind * wind_gen - params.beta_solar * solar_gen
            + 6.0 * (load - 4.0)
            + 4.0 * u
            + 2.0 * unit.sample(&mut rng);
        price_prev = price;

        for (c, v) in cols.iter_mut().zip([
            price,
            wind_gen,
            solar_gen,
            wind_pot,
            solar_pot,
            load,
            temperature,
            holiday,
        ]) {
            c.push(v);
        }
    }
    Ok(SyntheticTable {
        dates,
        columns: cols,
        params: params.clone(),
    })
}

impl SyntheticTable {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        COLUMNS
            .iter()
            .position(|c| *c == name)
            .map(|i| self.columns[i].as_slice())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["date"];
        header.extend(COLUMNS);
        w.write_record(&header)?;
        for (i, d) in self.dates.iter().enumerate() {
            let mut rec = vec![d.format("%Y-%m-%d").to_string()];
            rec.extend(self.columns.iter().map(|c| format!("{:.6}", c[i])));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Dataset under [`default_schema`], standardized.
    pub fn to_dataset(&self) -> Result<Dataset> {
        let s = |name: &str| Series::new(name, self.column(name).expect("known column").to_vec());
        Dataset::new(
            self.dates.clone(),
            s("price"),
            vec![s("wind_gen"), s("solar_gen")],
            vec![s("wind_pot"), s("solar_pot")],
            vec![s("load"), s("temperature")],
            vec![s("holiday")],
        )?
        .standardized()
    }
}

/// Column roles of the synthetic table.
pub fn default_schema() -> Schema {
    let v = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
    Schema {
        date: "date".into(),
        outcome: "price".into(),
        treatments: v(&["wind_gen", "solar_gen"]),
        instruments: v(&["wind_pot", "solar_pot"]),
        controls: v(&["load", "temperature"]),
        indicators: v(&["holiday"]),
        standardize: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn easter_dates() {
        let ymd = |y, m, d| NaiveDate::from_ymd_opt(y, m, d).unwrap();
        assert_eq!(easter(2015), ymd(2015, 4, 5));
        assert_eq!(easter(2016), ymd(2016, 3, 27));
        assert_eq!(easter(2017), ymd(2017, 4, 16));
        assert_eq!(easter(2024), ymd(2024, 3, 31));
        assert_eq!(easter(2000), ymd(2000, 4, 23));
    }

    #[test]
    fn holiday_calendar() {
        let ymd = |y, m, d| NaiveDate::from_ymd_opt(y, m, d).unwrap();
        let h = danish_holidays(2016);
        assert!(h.contains(&ymd(2016, 3, 24))); // Maundy Thursday
        assert!(h.contains(&ymd(2016, 4, 22))); // Great Prayer Day
        assert!(h.contains(&ymd(2016, 5, 5))); // Ascension
        assert!(h.contains(&ymd(2016, 5, 16))); // Whit Monday
        assert!(!danish_holidays(2024).contains(&ymd(2024, 4, 26)));
    }

    #[test]
    fn table_shape_and_ranges() {
        let t = generate_synthetic(&SyntheticParams::default()).unwrap();
        assert_eq!(t.dates.len(), 1096);
        assert_eq!(t.dates[0], NaiveDate::from_ymd_opt(2015, 1, 1).unwrap());
        assert!(t.column("wind_pot").unwrap().iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(t.column("solar_pot").unwrap().iter().all(|v| *v >= 0.0));
        let hol: f64 = t.column("holiday").unwrap().iter().sum();
        assert!((30.0..45.0).contains(&hol));
        let ds = t.to_dataset().unwrap();
        assert_eq!(ds.treatments.len(), 2);
        let again = generate_synthetic(&SyntheticParams::default()).unwrap();
        assert_eq!(t, again);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("synthetic.csv");
        let t = generate_synthetic(&SyntheticParams { days: 60, ..Default::default() }).unwrap();
        t.write_csv(&path).unwrap();
        let ds = crate::dataset::load_csv(&path, &default_schema()).unwrap();
        assert_eq!(ds.len(), 60);
        let price = t.column("price").unwrap();
        for (a, b) in ds.outcome.values.iter().zip(price) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}
