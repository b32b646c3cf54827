//! Sup-t critical values under different correlation structures, from
//! independent horizons to the strongly correlated paths typical of IRFs.

use nalgebra::DMatrix;
use qb_lpiv::inference::{pointwise_critical_value, sup_t_band, sup_t_critical_value, SupTSettings};

fn main() -> anyhow::Result<()> {
    let level = 0.90;
    let sim = SupTSettings::default();
    println!("pointwise critical value {:.3}", pointwise_critical_value(level));
    for r in [0.0f64, 0.5, 0.8, 0.95, 1.0] {
        let corr = DMatrix::from_fn(8, 8, |i, j| r.powi((i as i32 - j as i32).abs()));
        let c = sup_t_critical_value(&corr, level, sim)?;
        println!("AR(1)-type correlation {r:.2}: sup-t critical value {c:.3}");
    }

    let est = nalgebra::DVector::from_vec(vec![1.0, 0.7, 0.5, 0.3, 0.2, 0.1, 0.05, 0.0]);
    let v = DMatrix::from_fn(8, 8, |i, j| 0.01 * 0.8f64.powi((i as i32 - j as i32).abs()) * (1.0 + 0.2 * (i + j) as f64));
    let band = sup_t_band(&est, &v, level, sim)?;
    println!("\nband with critical value {:.3}", band.critical_value);
    for (h, b) in band.bands.iter().enumerate() {
        println!("  h={h}: {:.3} in [{:.3}, {:.3}]", est[h], b.lo, b.hi);
    }
    Ok(())
}
