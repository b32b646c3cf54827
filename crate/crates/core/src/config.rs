//! Run configuration: a flat key = value file (TOML syntax, no tables)
//! overlaid by command-line flags.
//!
//! The same format is written back as the run manifest, with every default
//! resolved and the input digest recorded, so a manifest can be passed to
//! `--config` to repeat a run exactly.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::Schema;
use crate::design::{SpecConfig, SpecKind};
use crate::error::{Error, Result};
use crate::estimate::{EstimationConfig, Estimator};
use crate::gmm::CovMode;
use crate::inference::SupTSettings;
use crate::instruments::PowerCurveParams;
use crate::prior::PriorConfig;
use crate::sampler::McmcConfig;
use crate::simulate::{DgpParams, McGrid};
use crate::synthetic::{default_schema, SyntheticParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Estimate,
    Simulate,
    Instruments,
    Diagnose,
    MakeSynthetic,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Estimate => "estimate",
            Command::Simulate => "simulate",
            Command::Instruments => "instruments",
            Command::Diagnose => "diagnose",
            Command::MakeSynthetic => "make-synthetic",
        }
    }

    fn default_seed(&self) -> u64 {
        match self {
            Command::Simulate => 20_240_601,
            Command::MakeSynthetic => 20_150_101,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_sha256: Option<String>,
    pub out_dir: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Bounds parallelism only; outputs do not depend on it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,

    // column roles; when `outcome` is unset the synthetic layout is used
    #[serde(skip_serializing_if = "Option::is_none")]
    pub date: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<String>,
    pub treatments: Vec<String>,
    pub instruments: Vec<String>,
    pub controls: Vec<String>,
    pub indicators: Vec<String>,
    pub standardize: bool,

    pub spec: String,
    pub horizons: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lags: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fourier: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub day_of_week: Option<bool>,

    pub prior: String,
    pub rho: f64,
    pub kappa: f64,
    pub draws: usize,
    pub burn: usize,
    pub thinning: usize,
    pub init_tau: f64,
    pub cov: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub har_bandwidth: Option<usize>,
    pub level: f64,
    pub sup_t_sims: usize,

    // simulate
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    pub estimators: Vec<String>,
    pub dgp_phi: f64,
    pub dgp_beta: f64,
    pub dgp_pi_z: f64,
    pub dgp_kappa_u: f64,

    // diagnose
    pub placebo_lags: Vec<usize>,
    pub max_lead: usize,
    pub lead_estimator: String,

    // instruments
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weather: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub capacity: Option<PathBuf>,
    pub cut_in: f64,
    pub rated: f64,
    pub cut_out: f64,

    // make-synthetic
    pub start: String,
    pub days: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sp = SyntheticParams::default();
        let pc = PowerCurveParams::default();
        let dgp = DgpParams::default();
        RunConfig {
            command: None,
            input: None,
            input_sha256: None,
            out_dir: PathBuf::from("out"),
            seed: None,
            workers: None,
            date: None,
            outcome: None,
            treatments: Vec::new(),
            instruments: Vec::new(),
            controls: Vec::new(),
            indicators: Vec::new(),
            standardize: true,
            spec: "ld".into(),
            horizons: 7,
            lags: None,
            fourier: None,
            day_of_week: None,
            prior: "rp".into(),
            rho: 4.0,
            kappa: 1.0,
            draws: 25_000,
            burn: 5_000,
            thinning: 1,
            init_tau: 1.0,
            cov: "plain".into(),
            har_bandwidth: None,
            level: 0.90,
            sup_t_sims: 100_000,
            sample_sizes: vec![200, 500, 1000],
            replications: 200,
            estimators: vec!["gmm".into(), "qb_flat".into(), "qb_rp".into()],
            dgp_phi: dgp.phi,
            dgp_beta: dgp.beta,
            dgp_pi_z: dgp.pi_z,
            dgp_kappa_u: dgp.kappa_u,
            placebo_lags: (1..=7).collect(),
            max_lead: 8,
            lead_estimator: "qb_rp".into(),
            weather: None,
            capacity: None,
            cut_in: pc.cut_in,
            rated: pc.rated,
            cut_out: pc.cut_out,
            start: sp.start.to_string(),
            days: sp.days,
        }
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_str(&text)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn from_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn seed_for(&self, cmd: Command) -> u64 {
        self.seed.unwrap_or_else(|| cmd.default_seed())
    }

    pub fn schema(&self) -> Schema {
        match &self.outcome {
            None => Schema {
                standardize: self.standardize,
                ..default_schema()
            },
            Some(outcome) => Schema {
                date: self.date.clone().unwrap_or_else(|| "date".into()),
                outcome: outcome.clone(),
                treatments: self.treatments.clone(),
                instruments: self.instruments.clone(),
                controls: self.controls.clone(),
                indicators: self.indicators.clone(),
                standardize: self.standardize,
            },
        }
    }

    /// Estimation specification. Monte Carlo runs default to two lags and
    /// no calendar terms; empirical runs to seven lags, four Fourier pairs
    /// and day-of-week indicators.
    pub fn spec_config(&self, cmd: Command) -> Result<SpecConfig> {
        let mc = cmd == Command::Simulate;
        let kind: SpecKind = self.spec.parse()?;
        Ok(SpecConfig {
            kind,
            horizons: self.horizons,
            lags: self.lags.unwrap_or(if mc { 2 } else { 7 }),
            fourier: self.fourier.unwrap_or(if mc { 0 } else { 4 }),
            day_of_week: self.day_of_week.unwrap_or(!mc),
        })
    }

    pub fn cov_mode(&self) -> Result<CovMode> {
        match self.cov.parse()? {
            CovMode::Har { .. } => Ok(CovMode::Har {
                bandwidth: self.har_bandwidth,
            }),
            other => Ok(other),
        }
    }

    /// Estimator implied by `prior`.
    pub fn estimator(&self) -> Result<Estimator> {
        match self.prior.trim().to_ascii_lowercase().as_str() {
            "flat" => Ok(Estimator::QbFlat),
            "rp" | "roughness" => Ok(Estimator::QbRp),
            "none" | "gmm" => Ok(Estimator::Gmm),
            other => Err(Error::Config(format!("unknown prior `{other}` (flat|rp)"))),
        }
    }

    pub fn estimation(&self, cmd: Command) -> Result<EstimationConfig> {
        let seed = self.seed_for(cmd);
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Config(format!("level must lie in (0, 1), got {}", self.level)));
        }
        let prior = PriorConfig {
            rho: self.rho,
            kappa: self.kappa,
        };
        prior.validate()?;
        let mcmc = McmcConfig {
            n_draws: self.draws,
            n_burn: self.burn,
            thinning: self.thinning,
            seed,
            chain_id: 0,
            init_tau: self.init_tau,
            keep_draws: false,
        };
        mcmc.validate()?;
        Ok(EstimationConfig {
            cov_mode: self.cov_mode()?,
            prior,
            mcmc,
            level: self.level,
            sup_t: SupTSettings {
                n_sim: self.sup_t_sims,
                seed,
                stream: 1,
            },
        })
    }

    pub fn mc_grid(&self) -> Result<McGrid> {
        let estimators = self
            .estimators
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<Estimator>>>()?;
        let dgp = DgpParams {
            phi: self.dgp_phi,
            beta: self.dgp_beta,
            pi_z: self.dgp_pi_z,
            kappa_u: self.dgp_kappa_u,
            ..DgpParams::default()
        };
        dgp.validate()?;
        Ok(McGrid {
            sample_sizes: self.sample_sizes.clone(),
            estimators,
            replications: self.replications,
            dgp,
            spec: self.spec_config(Command::Simulate)?,
            estimation: self.estimation(Command::Simulate)?,
            seed: self.seed_for(Command::Simulate),
        })
    }

    pub fn power_curve(&self) -> Result<PowerCurveParams> {
        let p = PowerCurveParams {
            cut_in: self.cut_in,
            rated: self.rated,
            cut_out: self.cut_out,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn synthetic(&self) -> Result<SyntheticParams> {
        let start = NaiveDate::parse_from_str(&self.start, "%Y-%m-%d")
            .map_err(|_| Error::Config(format!("start must be YYYY-MM-DD, got `{}`", self.start)))?;
        Ok(SyntheticParams {
            start,
            days: self.days,
            seed: self.seed_for(Command::MakeSynthetic),
            ..SyntheticParams::default()
        })
    }

    /// Copy with the command, seed and spec defaults filled in, as written
    /// to the run manifest.
    pub fn resolved(&self, cmd: Command) -> Result<Self> {
        let spec = self.spec_config(cmd)?;
        let mut out = self.clone();
        out.command = Some(cmd.name().to_string());
        out.seed = Some(self.seed_for(cmd));
        out.lags = Some(spec.lags);
        out.fourier = Some(spec.fourier);
        out.day_of_week = Some(spec.day_of_week);
        out.workers = None;
        if self.outcome.is_none() && matches!(cmd, Command::Estimate | Command::Diagnose) {
            let s = default_schema();
            out.date = Some(s.date);
            out.outcome = Some(s.outcome);
            out.treatments = s.treatments;
            out.instruments = s.instruments;
            out.controls = s.controls;
            out.indicators = s.indicators;
        }
        Ok(out)
    }

    /// Input path, checked against a recorded digest when one is present.
    pub fn checked_input(&self) -> Result<(PathBuf, String)> {
        let path = self
            .input
            .clone()
            .ok_or_else(|| Error::Config("no input file given (`input` or --input)".into()))?;
        let digest = sha256_file(&path)?;
        if let Some(expected) = &self.input_sha256 {
            if !expected.eq_ignore_ascii_case(&digest) {
                return Err(Error::Config(format!(
                    "{} has sha256 {digest}, but the config records {expected}",
                    path.display()
                )));
            }
        }
        Ok((path, digest))
    }
}
