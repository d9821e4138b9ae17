//! Run configuration: one JSON document, unknown fields rejected.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use freespectra::{GridSpec, NetworkSpec, SolverConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub network: NetworkSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_y")]
    pub y: f64,
    #[serde(default = "default_probs")]
    pub probs: Vec<f64>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub mc: MonteCarloConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloConfig {
    pub n0: usize,
    pub seed: u64,
    pub enabled: bool,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            n0: 1000,
            seed: 0,
            enabled: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub format: Format,
    /// Standard output when absent.
    pub path: Option<PathBuf>,
}

fn default_y() -> f64 {
    1e-6
}

fn default_probs() -> Vec<f64> {
    (1..10).map(|k| k as f64 / 10.0).collect()
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub points: Option<usize>,
    pub y: Option<f64>,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(out) = &o.out {
            self.output.path = Some(out.clone());
        }
        if let Some(points) = o.points {
            self.grid.points = points;
        }
        if let Some(y) = o.y {
            self.y = y;
        }
        if let Some(seed) = o.seed {
            self.mc.seed = seed;
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.y > 0.0 && self.y.is_finite()) {
            bail!("y must be positive (got {})", self.y);
        }
        if let Some(&p) = self.probs.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
            bail!("probs: {p} lies outside (0, 1)");
        }
        if self.grid.points < 2 {
            bail!("grid.points must be at least 2");
        }
        self.network.validate()?;
        self.solver.validate()?;
        Ok(())
    }
}
