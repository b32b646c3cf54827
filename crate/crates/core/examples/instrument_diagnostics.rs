//! First-stage relevance, placebo regressions on predetermined variables
//! and the lead placebo on the bundled synthetic data.

use qb_lpiv::dataset::load_csv;
use qb_lpiv::design::SpecConfig;
use qb_lpiv::diagnostics::{first_stage, lead_placebo, placebo_predetermined};
use qb_lpiv::estimate::{EstimationConfig, Estimator};
use qb_lpiv::synthetic::default_schema;

fn main() -> anyhow::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/synthetic_electricity.csv");
    let ds = load_csv(path, &default_schema())?;
    let spec = SpecConfig::default();

    let fs = first_stage(&ds, &spec)?;
    println!("first stage (standardized), instruments {:?}", fs.instruments);
    for r in &fs.rows {
        let rel = &r.relevance;
        println!(
            "  {:>10}: coef {:.3?}, partial R² {:.3}, Wald {:.1} (df {}), p {:.2e}",
            r.treatment, rel.coefficients, rel.partial_r2, rel.wald, rel.df, rel.p_value
        );
    }
    println!("  smallest singular value {:.3}", fs.smallest_singular_value);

    println!("\nplacebo: predetermined variables on current instruments");
    for r in placebo_predetermined(&ds, &[1, 2, 7], &spec)? {
        println!(
            "  {:>11} lag {}: partial R² {:.3}, p {:.2e}",
            r.variable, r.lag, r.relevance.partial_r2, r.relevance.p_value
        );
    }

    let mut cfg = EstimationConfig::default();
    cfg.mcmc.n_draws = 6_000;
    cfg.mcmc.n_burn = 1_000;
    let leads = lead_placebo(&ds, &spec, 8, Estimator::QbRp, &cfg)?;
    println!("\nlead placebo (level specification)");
    for r in &leads.rows {
        let zero_inside = r.ci_lo <= 0.0 && 0.0 <= r.ci_hi;
        println!(
            "  {:>10} lead {:>3}: {:>7.3} [{:>7.3}, {:>7.3}]{}",
            r.treatment,
            r.horizon,
            r.estimate,
            r.ci_lo,
            r.ci_hi,
            if zero_inside { "" } else { "  *" }
        );
    }
    Ok(())
}
