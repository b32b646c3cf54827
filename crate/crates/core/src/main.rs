use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qb_lpiv::commands::{run, with_workers};
use qb_lpiv::config::{Command, RunConfig};

#[derive(Parser)]
#[command(name = "qb-lpiv", version, about = "Quasi-Bayesian local-projection IV impulse responses")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Estimate impulse responses with pointwise and sup-t bands
    Estimate(Common),
    /// Monte Carlo study on the simulated design
    Simulate(Common),
    /// Zone-level wind and solar potentials from gridded weather
    Instruments(Common),
    /// First-stage, placebo and lead-placebo diagnostics
    Diagnose(Common),
    /// Write the bundled synthetic electricity dataset
    #[command(name = "make-synthetic", hide = true)]
    MakeSynthetic(Common),
}

#[derive(Args)]
struct Common {
    /// Flat key = value config file (a run manifest works too)
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    weather: Option<PathBuf>,
    #[arg(long)]
    capacity: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    level: Option<f64>,
    /// flat | rp
    #[arg(long)]
    prior: Option<String>,
    /// plain | block | har
    #[arg(long)]
    cov: Option<String>,
    /// level | ld
    #[arg(long)]
    spec: Option<String>,
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long)]
    burn: Option<usize>,
    #[arg(long)]
    replications: Option<usize>,
}

impl Common {
    fn apply(self) -> anyhow::Result<(RunConfig, Option<usize>)> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { cfg.$f = v; } )* };
        }
        macro_rules! set_opt {
            ($($f:ident),*) => { $( if self.$f.is_some() { cfg.$f = self.$f; } )* };
        }
        if self.input.is_some() {
            // a new input invalidates a digest carried over from a manifest
            cfg.input_sha256 = None;
        }
        set!(out_dir, level, prior, cov, spec, draws, burn, replications);
        set_opt!(input, weather, capacity, seed);
        let workers = self.workers.or(cfg.workers);
        Ok((cfg, workers))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, common) = match cli.command {
        Cmd::Estimate(c) => (Command::Estimate, c),
        Cmd::Simulate(c) => (Command::Simulate, c),
        Cmd::Instruments(c) => (Command::Instruments, c),
        Cmd::Diagnose(c) => (Command::Diagnose, c),
        Cmd::MakeSynthetic(c) => (Command::MakeSynthetic, c),
    };
    let result = common.apply().and_then(|(cfg, workers)| {
        let written = with_workers(workers, || run(cmd, &cfg))??;
        Ok(written)
    });
    match result {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("qb-lpiv {}: {e:#}", cmd.name());
            ExitCode::FAILURE
        }
    }
}
