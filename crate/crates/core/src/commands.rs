//! Batch commands behind the `qb-lpiv` binary. Each command reads a
//! [`RunConfig`], writes CSV outputs plus `run_manifest.toml` into
//! `out_dir`, and returns the paths it wrote.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{Command, RunConfig};
use crate::dataset::{load_csv, Dataset};
use crate::design::{build_design, LpDesign};
use crate::diagnostics::{first_stage, lead_placebo, placebo_predetermined, write_first_stage_csv, write_placebo_csv};
use crate::error::{Error, Result};
use crate::estimate::{estimate, Estimate};
use crate::inference::write_irf_csv;
use crate::instruments::{write_potentials_csv, zone_potentials_from_csv};
use crate::simulate::run_monte_carlo;
use crate::synthetic::generate_synthetic;

pub const MANIFEST: &str = "run_manifest.toml";

/// Run `f` on a dedicated pool of `workers` threads (all cores if `None`).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        if w == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        b = b.num_threads(w);
    }
    let pool = b.build().map_err(|e| Error::Config(e.to_string()))?;
    Ok(pool.install(f))
}

pub fn run(cmd: Command, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    match cmd {
        Command::Estimate => cmd_estimate(cfg),
        Command::Simulate => cmd_simulate(cfg),
        Command::Instruments => cmd_instruments(cfg),
        Command::Diagnose => cmd_diagnose(cfg),
        Command::MakeSynthetic => cmd_make_synthetic(cfg),
    }
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    Ok(cfg.out_dir.clone())
}

fn write_manifest(cfg: &RunConfig, cmd: Command, digest: Option<String>, dir: &Path) -> Result<PathBuf> {
    let mut m = cfg.resolved(cmd)?;
    if digest.is_some() {
        m.input_sha256 = digest;
    }
    let text = format!(
        "# qb-lpiv {} run manifest; pass to --config to repeat\n{}",
        env!("CARGO_PKG_VERSION"),
        m.to_toml()?
    );
    let path = dir.join(MANIFEST);
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Re-read a written CSV and require a header and at least one record.
fn validated(path: PathBuf) -> Result<PathBuf> {
    let mut r = csv::Reader::from_path(&path)?;
    let width = r.headers()?.len();
    let mut rows = 0usize;
    for rec in r.records() {
        if rec?.len() != width {
            return Err(Error::Dimension(format!("ragged row in {}", path.display())));
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::TooShort { needed: 1, got: 0 });
    }
    Ok(path)
}

fn load_input(cfg: &RunConfig) -> Result<(Dataset, String)> {
    let (path, digest) = cfg.checked_input()?;
    Ok((load_csv(&path, &cfg.schema())?, digest))
}

#[derive(Serialize)]
struct ThetaRow<'a> {
    coord: usize,
    horizon: i64,
    covariate: &'a str,
    theta_hat: f64,
    theta_star: f64,
    se: f64,
}

pub fn write_theta_csv(est: &Estimate, design: &LpDesign, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for k in 0..design.k() {
        let (h, j) = design.position(k);
        w.serialize(ThetaRow {
            coord: k,
            horizon: design.horizons[h],
            covariate: &design.column_names[j],
            theta_hat: est.theta_hat[k],
            theta_star: est.theta_star[k],
            se: est.v_hat[(k, k)].max(0.0).sqrt(),
        })?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Load → design → moment model → chain → sandwich → bands.
/// Writes `irf.csv`, `theta.csv` and the manifest.
pub fn cmd_estimate(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let cmd = Command::Estimate;
    let (ds, digest) = load_input(cfg)?;
    let design = build_design(&ds, &cfg.spec_config(cmd)?)?;
    let est = estimate(&design, cfg.estimator()?, &cfg.estimation(cmd)?)?;
    let dir = out_dir(cfg)?;
    let irf = dir.join("irf.csv");
    write_irf_csv(&est.irf, &irf)?;
    let theta = dir.join("theta.csv");
    write_theta_csv(&est, &design, &theta)?;
    Ok(vec![
        validated(irf)?,
        validated(theta)?,
        write_manifest(cfg, cmd, Some(digest), &dir)?,
    ])
}

/// Monte Carlo grid; writes `mc_pointwise.csv`, `mc_simultaneous.csv`.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let cmd = Command::Simulate;
    let report = run_monte_carlo(&cfg.mc_grid()?)?;
    let dir = out_dir(cfg)?;
    let pw = dir.join("mc_pointwise.csv");
    let sim = dir.join("mc_simultaneous.csv");
    report.write_csv(&pw, &sim)?;
    Ok(vec![validated(pw)?, validated(sim)?, write_manifest(cfg, cmd, None, &dir)?])
}

/// Weather + capacity tables → `potentials.csv`.
pub fn cmd_instruments(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let cmd = Command::Instruments;
    let weather = cfg
        .weather
        .as_ref()
        .ok_or_else(|| Error::Config("no weather file given (`weather` or --weather)".into()))?;
    let capacity = cfg
        .capacity
        .as_ref()
        .ok_or_else(|| Error::Config("no capacity file given (`capacity` or --capacity)".into()))?;
    let rows = zone_potentials_from_csv(weather, capacity, &cfg.power_curve()?)?;
    let dir = out_dir(cfg)?;
    let out = dir.join("potentials.csv");
    write_potentials_csv(&rows, &out)?;
    Ok(vec![validated(out)?, write_manifest(cfg, cmd, None, &dir)?])
}

/// Writes `first_stage.csv`, `placebo.csv` and `lead_placebo.csv`.
pub fn cmd_diagnose(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let cmd = Command::Diagnose;
    let (ds, digest) = load_input(cfg)?;
    let spec = cfg.spec_config(cmd)?;
    let fs = first_stage(&ds, &spec)?;
    let placebo = placebo_predetermined(&ds, &cfg.placebo_lags, &spec)?;
    let leads = lead_placebo(
        &ds,
        &spec,
        cfg.max_lead,
        cfg.lead_estimator.parse()?,
        &cfg.estimation(cmd)?,
    )?;
    let dir = out_dir(cfg)?;
    let (f1, f2, f3) = (dir.join("first_stage.csv"), dir.join("placebo.csv"), dir.join("lead_placebo.csv"));
    write_first_stage_csv(&fs, &f1)?;
    write_placebo_csv(&placebo, &fs.instruments, &f2)?;
    write_irf_csv(&leads, &f3)?;
    Ok(vec![
        validated(f1)?,
        validated(f2)?,
        validated(f3)?,
        write_manifest(cfg, cmd, Some(digest), &dir)?,
    ])
}

/// Writes the synthetic electricity table as `synthetic_electricity.csv`.
pub fn cmd_make_synthetic(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let cmd = Command::MakeSynthetic;
    let table = generate_synthetic(&cfg.synthetic()?)?;
    let dir = out_dir(cfg)?;
    let out = dir.join("synthetic_electricity.csv");
    table.write_csv(&out)?;
    Ok(vec![validated(out)?, write_manifest(cfg, cmd, None, &dir)?])
}
