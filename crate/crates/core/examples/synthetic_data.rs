//! Generate the synthetic electricity table and summarize it.
//!
//!     cargo run --example synthetic_data [-- out.csv]

use qb_lpiv::synthetic::{generate_synthetic, SyntheticParams, COLUMNS};

fn main() -> anyhow::Result<()> {
    let params = SyntheticParams::default();
    let table = generate_synthetic(&params)?;
    println!(
        "{} days from {}; price response to 1 GW of wind: {:.2} at h=0, {:.2} at h=3",
        table.dates.len(),
        params.start,
        -params.beta_wind,
        -params.beta_wind * params.phi.powi(3)
    );
    for (name, col) in COLUMNS.iter().zip(&table.columns) {
        let n = col.len() as f64;
        let mean = col.iter().sum::<f64>() / n;
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let (lo, hi) = col.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        println!("{name:>12}: mean {mean:>8.3}, sd {sd:>7.3}, range [{lo:.3}, {hi:.3}]");
    }
    if let Some(out) = std::env::args().nth(1) {
        table.write_csv(out.as_ref())?;
        println!("wrote {out}");
    }
    Ok(())
}
