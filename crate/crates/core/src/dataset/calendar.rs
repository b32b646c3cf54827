use std::f64::consts::PI;

use chrono::{Datelike, NaiveDate, Weekday};

/// Seasonal regressors derived from calendar dates.
#[derive(Debug, Clone, PartialEq)]
pub struct CalendarFeatures {
    /// Normalized within-year position in `[0, 1)`.
    pub position: Vec<f64>,
    /// `sin[n-1][t] = sin(2π n s_t)`.
    pub sin: Vec<Vec<f64>>,
    /// `cos[n-1][t] = cos(2π n s_t)`.
    pub cos: Vec<Vec<f64>>,
}

fn days_in_year(year: i32) -> u32 {
    if NaiveDate::from_ymd_opt(year, 2, 29).is_some() {
        366
    } else {
        365
    }
}

/// `(day_of_year - 1) / days_in_year`, so leap years divide by 366.
pub fn within_year_position(date: NaiveDate) -> f64 {
    date.ordinal0() as f64 / days_in_year(date.year()) as f64
}

/// Fourier terms `sin(2π n s_t)`, `cos(2π n s_t)` for `n = 1..=n_terms`.
pub fn fourier_features(dates: &[NaiveDate], n_terms: usize) -> CalendarFeatures {
    let position: Vec<f64> = dates.iter().map(|d| within_year_position(*d)).collect();
    let mut sin = Vec::with_capacity(n_terms);
    let mut cos = Vec::with_capacity(n_terms);
    for n in 1..=n_terms {
        let w = 2.0 * PI * n as f64;
        sin.push(position.iter().map(|s| (w * s).sin()).collect());
        cos.push(position.iter().map(|s| (w * s).cos()).collect());
    }
    CalendarFeatures { position, sin, cos }
}

/// Six 0/1 columns for Tuesday..Sunday; Monday is the omitted category.
pub fn day_of_week_indicators(dates: &[NaiveDate]) -> Vec<Vec<f64>> {
    const DAYS: [Weekday; 6] = [
        Weekday::Tue,
        Weekday::Wed,
        Weekday::Thu,
        Weekday::Fri,
        Weekday::Sat,
        Weekday::Sun,
    ];
    DAYS.iter()
        .map(|day| {
            dates
                .iter()
                .map(|d| if d.weekday() == *day { 1.0 } else { 0.0 })
                .collect()
        })
        .collect()
}

pub const DAY_OF_WEEK_NAMES: [&str; 6] = ["dow_tue", "dow_wed", "dow_thu", "dow_fri", "dow_sat", "dow_sun"];
