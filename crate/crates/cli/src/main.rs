//! `freespectra` command-line front end.

mod artifact;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};

use artifact::DensityArtifact;
use config::{Overrides, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "freespectra",
    version,
    about = "Jacobian singular-value spectra of random networks at initialization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of grid points.
    #[arg(long)]
    points: Option<usize>,
    /// Distance of the evaluation line above the real axis.
    #[arg(long, allow_negative_numbers = true)]
    y: Option<f64>,
    /// Monte-Carlo seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Density on a grid, written as `x,rho` rows.
    Density(Common),
    /// Quantiles of the continuous part, with their base-10 logarithms.
    Quantiles {
        #[command(flatten)]
        common: Common,
        /// Use a flat density on [0, X_MAX] instead of a network.
        #[arg(long, value_name = "X_MAX", conflicts_with = "from")]
        uniform: Option<f64>,
        /// Recompute from a density artifact written by `density`.
        #[arg(long, value_name = "PATH")]
        from: Option<PathBuf>,
    },
    /// Kolmogorov-Smirnov check against a sampled finite-width Jacobian.
    Validate(Common),
    /// Timings of the lilypads solver, the all-roots baseline and Monte-Carlo.
    Bench {
        #[command(flatten)]
        common: Common,
        /// Repeat the configured layers to each of these depths.
        #[arg(long, value_delimiter = ',')]
        depths: Vec<usize>,
    },
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            out: self.out.clone(),
            points: self.points,
            y: self.y,
            seed: self.seed,
        }
    }

    fn load(&self) -> Result<RunConfig> {
        let path = self.config.as_ref().ok_or_else(|| anyhow!("--config is required"))?;
        let mut cfg = RunConfig::load(path)?;
        cfg.apply(&self.overrides());
        cfg.validate()?;
        Ok(cfg)
    }
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("FREESPECTRA_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| anyhow!("FREESPECTRA_THREADS must be a positive integer, got `{value}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("configuring the thread pool")
}

/// `Ok(false)` signals a completed run whose check failed.
fn run(cli: Cli) -> Result<bool> {
    configure_threads()?;
    match cli.command {
        Command::Density(common) => commands::density(&common.load()?)?,
        Command::Quantiles { common, uniform, from } => {
            if uniform.is_none() && from.is_none() {
                commands::quantiles_cmd(&common.load()?)?;
            } else {
                // no network needed; a config only contributes probs and output
                let cfg = match &common.config {
                    Some(_) => common.load()?,
                    None => {
                        let mut cfg = RunConfig::parse(r#"{"network": {"layers": []}}"#)?;
                        cfg.apply(&common.overrides());
                        cfg
                    }
                };
                let curve = match (uniform, from) {
                    (Some(width), _) => commands::uniform_curve(width, cfg.grid.points.max(2))?,
                    (None, Some(path)) => {
                        let text =
                            std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                        DensityArtifact::parse(&text)
                            .and_then(|a| a.curve())
                            .with_context(|| format!("invalid density artifact {}", path.display()))?
                    }
                    (None, None) => unreachable!(),
                };
                commands::quantiles_of(&curve, &cfg)?;
            }
        }
        Command::Validate(common) => return commands::validate(&common.load()?),
        Command::Bench { common, depths } => commands::bench(&common.load()?, &depths)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
