//! Zone-level wind and solar potentials from a tiny hourly weather grid:
//! three cells over two days in two bidding zones.

use std::fmt::Write as _;

use qb_lpiv::instruments::{power_curve, zone_potentials_from_csv, PowerCurveParams};

fn main() -> anyhow::Result<()> {
    let curve = PowerCurveParams::default();
    for ws in [2.0, 3.0, 5.0, 8.0, 12.0, 13.0, 20.0, 25.0] {
        println!("wind speed {ws:>4.1} m/s -> capacity factor {:.3}", power_curve(ws, &curve));
    }

    let dir = tempfile::tempdir()?;
    let weather = dir.path().join("weather.csv");
    let capacity = dir.path().join("capacity.csv");
    let mut w = String::from("cell_id,timestamp,u100,v100,ssr\n");
    for (cell, base) in [("a", 6.0), ("b", 9.0), ("c", 4.0)] {
        for day in 1..=2 {
            for hour in 0..24i32 {
                let u = base + day as f64 + (hour as f64 / 4.0).sin();
                let v = 0.5 * base;
                let clear = if (6..18).contains(&hour) { 0.2 * (12 - (hour - 12).abs()) as f64 } else { 0.0 };
                let ssr = clear * (0.6 + 0.15 * day as f64) * base / 9.0;
                writeln!(w, "{cell},2024-06-0{day}T{hour:02}:00:00,{u:.3},{v:.3},{ssr:.3}")?;
            }
        }
    }
    std::fs::write(&weather, w)?;
    std::fs::write(
        &capacity,
        "cell_id,zone,wind_mw,solar_mw\na,DK1,300,50\nb,DK1,100,150\nc,DK2,80,20\n",
    )?;

    for row in zone_potentials_from_csv(&weather, &capacity, &curve)? {
        println!(
            "{} {}: wind {:.3}, solar {:.3}",
            row.date, row.zone, row.wind_potential, row.solar_potential
        );
    }
    Ok(())
}
