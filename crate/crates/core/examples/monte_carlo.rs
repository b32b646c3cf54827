//! A small Monte Carlo on the simulated endogenous design: bias, RMSE,
//! interval length and coverage by estimator, sample size and horizon.
//!
//!     cargo run --release --example monte_carlo [-- replications]

use qb_lpiv::estimate::Estimator;
use qb_lpiv::simulate::{run_monte_carlo, McGrid};

fn main() -> anyhow::Result<()> {
    let replications = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(50);
    let mut grid = McGrid {
        sample_sizes: vec![200, 1000],
        replications,
        ..McGrid::default()
    };
    grid.estimation.mcmc.n_draws = 6_000;
    grid.estimation.mcmc.n_burn = 1_000;
    grid.estimation.sup_t.n_sim = 20_000;

    let report = run_monte_carlo(&grid)?;
    println!("{replications} replications, seed {}", report.seed);
    println!("{:>8} {:>5} {:>2} {:>7} {:>6} {:>6} {:>6}", "est", "T", "h", "bias", "rmse", "length", "cover");
    for c in &report.pointwise {
        println!(
            "{:>8} {:>5} {:>2} {:>7.3} {:>6.3} {:>6.3} {:>6.3}",
            c.estimator, c.t, c.h, c.bias, c.rmse, c.length, c.coverage
        );
    }
    println!("\nsimultaneous 90% coverage");
    for &t in &grid.sample_sizes {
        for e in [Estimator::Gmm, Estimator::QbFlat, Estimator::QbRp] {
            if let Some(s) = report.simultaneous_cell(e, t) {
                println!("{:>8} T={t:<5} {:.3} ({} failed)", s.estimator, s.coverage, s.failures);
            }
        }
    }
    Ok(())
}
