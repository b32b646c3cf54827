//! The smoothing precision Q = D'D + (8/ρ²)I and the prior correlation it
//! implies between horizons, against the closed-form exp(-√8 d / ρ).

use qb_lpiv::prior::{prior_correlation, smoothing_precision};

fn main() -> anyhow::Result<()> {
    let h = 200;
    for rho in [2.0, 4.0, 8.0] {
        let cov = smoothing_precision(h, rho)?
            .try_inverse()
            .ok_or_else(|| anyhow::anyhow!("Q is singular"))?;
        let mid = h / 2;
        println!("rho = {rho}");
        for d in [1, 2, 3, 5, 10] {
            let exact = cov[(mid, mid + d)] / (cov[(mid, mid)] * cov[(mid + d, mid + d)]).sqrt();
            println!(
                "  distance {d:>2}: implied {exact:.3}, approximation {:.3}",
                prior_correlation(d as f64, rho)
            );
        }
    }

    let q = smoothing_precision(7, 4.0)?;
    println!("\nQ for H = 7, rho = 4:\n{q:.3}");
    Ok(())
}
