//! Serialized results and their parsers. Floats are written with Rust's
//! shortest round-trip formatting, so parsing an artifact back yields the
//! exact bits that were computed.

use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use freespectra::{DensityCurve, QuantileTable};
use serde::{Deserialize, Serialize};

use crate::config::Format;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityArtifact {
    pub y: f64,
    pub total_mass: f64,
    pub atom_mass: f64,
    pub atom_lower_bound: f64,
    pub newton_iterations: usize,
    pub basins_chained: usize,
    pub window_covers_support: bool,
    pub x: Vec<f64>,
    pub rho: Vec<f64>,
}

impl DensityArtifact {
    pub fn new(curve: &DensityCurve, window_covers_support: bool) -> Self {
        Self {
            y: curve.y,
            total_mass: curve.total_mass,
            atom_mass: curve.atom_mass,
            atom_lower_bound: curve.atom_lower_bound,
            newton_iterations: curve.stats.newton_iterations,
            basins_chained: curve.stats.basins,
            window_covers_support,
            x: curve.xs.clone(),
            rho: curve.rhos.clone(),
        }
    }

    pub fn curve(&self) -> Result<DensityCurve> {
        Ok(DensityCurve::from_samples(
            self.x.clone(),
            self.rho.clone(),
            self.y,
            self.atom_mass,
            self.atom_lower_bound,
        )?)
    }

    pub fn render(&self, format: Format) -> Result<String> {
        Ok(match format {
            Format::Json => serde_json::to_string_pretty(self)? + "\n",
            Format::Csv => {
                let mut s = String::new();
                meta(&mut s, "y", num(self.y));
                meta(&mut s, "total_mass", num(self.total_mass));
                meta(&mut s, "atom_mass", num(self.atom_mass));
                meta(&mut s, "atom_lower_bound", num(self.atom_lower_bound));
                meta(&mut s, "newton_iterations", self.newton_iterations);
                meta(&mut s, "basins_chained", self.basins_chained);
                meta(&mut s, "window_covers_support", self.window_covers_support);
                s.push_str("x,rho\n");
                for (x, r) in self.x.iter().zip(&self.rho) {
                    s.push_str(&format!("{},{}\n", num(*x), num(*r)));
                }
                s
            }
        })
    }

    /// Reads either rendering; JSON is recognised by its opening brace.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            return Ok(serde_json::from_str(text)?);
        }
        let table = Table::parse(text, &["x", "rho"])?;
        Ok(Self {
            y: table.meta("y")?,
            total_mass: table.meta("total_mass")?,
            atom_mass: table.meta("atom_mass")?,
            atom_lower_bound: table.meta("atom_lower_bound")?,
            newton_iterations: table.meta("newton_iterations")?,
            basins_chained: table.meta("basins_chained")?,
            window_covers_support: table.meta("window_covers_support")?,
            x: table.column(0)?,
            rho: table.column(1)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileArtifact {
    pub atom_mass: f64,
    pub probs: Vec<f64>,
    pub quantiles: Vec<f64>,
    pub log10_quantiles: Vec<f64>,
}

impl QuantileArtifact {
    pub fn new(table: &QuantileTable, atom_mass: f64) -> Self {
        Self {
            atom_mass,
            probs: table.probs.clone(),
            quantiles: table.values.clone(),
            log10_quantiles: table.values.iter().map(|v| v.log10()).collect(),
        }
    }

    pub fn render(&self, format: Format) -> Result<String> {
        Ok(match format {
            Format::Json => serde_json::to_string_pretty(self)? + "\n",
            Format::Csv => {
                let mut s = String::new();
                meta(&mut s, "atom_mass", num(self.atom_mass));
                s.push_str("p,quantile,log10_quantile\n");
                for ((p, q), l) in self.probs.iter().zip(&self.quantiles).zip(&self.log10_quantiles) {
                    s.push_str(&format!("{},{},{}\n", num(*p), num(*q), num(*l)));
                }
                s
            }
        })
    }

    #[cfg(test)]
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            return Ok(serde_json::from_str(text)?);
        }
        let table = Table::parse(text, &["p", "quantile", "log10_quantile"])?;
        Ok(Self {
            atom_mass: table.meta("atom_mass")?,
            probs: table.column(0)?,
            quantiles: table.column(1)?,
            log10_quantiles: table.column(2)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub n0: usize,
    pub seed: u64,
    pub ks_distance: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl ValidationReport {
    pub fn render(&self, format: Format) -> Result<String> {
        Ok(match format {
            Format::Json => serde_json::to_string_pretty(self)? + "\n",
            Format::Csv => format!(
                "n0,seed,ks_distance,threshold,passed\n{},{},{},{},{}\n",
                self.n0,
                self.seed,
                num(self.ks_distance),
                num(self.threshold),
                self.passed
            ),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub stage: String,
    pub depth: usize,
    pub degree: usize,
    pub points: usize,
    pub wall_ms: f64,
    /// Newton iterations for lilypads, Aberth sweeps for all-roots; zero for
    /// Monte-Carlo.
    pub iterations: usize,
    pub iterations_per_point: f64,
}

pub fn render_bench(rows: &[BenchRow], format: Format) -> Result<String> {
    Ok(match format {
        Format::Json => serde_json::to_string_pretty(rows)? + "\n",
        Format::Csv => {
            let mut s = String::from("stage,depth,degree,points,wall_ms,iterations,iterations_per_point\n");
            for r in rows {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    r.stage,
                    r.depth,
                    r.degree,
                    r.points,
                    num(r.wall_ms),
                    r.iterations,
                    num(r.iterations_per_point)
                ));
            }
            s
        }
    })
}

/// Shortest representation that parses back to the same bits; switches to
/// exponent notation for very small or large magnitudes.
fn num(v: f64) -> String {
    format!("{v:?}")
}

fn meta(s: &mut String, key: &str, value: impl std::fmt::Display) {
    s.push_str(&format!("# {key}={value}\n"));
}

/// `# key=value` lines, one header, then comma-separated numeric rows.
struct Table {
    meta: Vec<(String, String)>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    fn parse(text: &str, header: &[&str]) -> Result<Self> {
        let mut meta = Vec::new();
        let mut rows = Vec::new();
        let mut seen_header = false;
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let (k, v) = rest
                    .split_once('=')
                    .ok_or_else(|| anyhow!("line {}: malformed metadata", n + 1))?;
                meta.push((k.trim().to_string(), v.trim().to_string()));
            } else if !seen_header {
                let found: Vec<&str> = line.split(',').map(str::trim).collect();
                if found != header {
                    bail!("line {}: expected header {}", n + 1, header.join(","));
                }
                seen_header = true;
            } else {
                let row = line
                    .split(',')
                    .map(|f| f.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .with_context(|| format!("line {}", n + 1))?;
                if row.len() != header.len() {
                    bail!("line {}: expected {} fields", n + 1, header.len());
                }
                rows.push(row);
            }
        }
        if !seen_header {
            bail!("missing header {}", header.join(","));
        }
        Ok(Self { meta, rows })
    }

    fn meta<T: std::str::FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::error::Error + Send + Sync + 'static,
    {
        let (_, v) = self
            .meta
            .iter()
            .find(|(k, _)| k == key)
            .ok_or_else(|| anyhow!("missing metadata `{key}`"))?;
        v.parse().with_context(|| format!("metadata `{key}`"))
    }

    fn column(&self, i: usize) -> Result<Vec<f64>> {
        Ok(self.rows.iter().map(|r| r[i]).collect())
    }
}

/// Writes to standard output, or to `path` via a sibling temporary file that
/// is renamed into place once complete.
pub fn emit(path: Option<&Path>, contents: &str) -> Result<()> {
    let Some(path) = path else {
        std::io::stdout().write_all(contents.as_bytes())?;
        return Ok(());
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp =
        tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating a file in {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DensityArtifact {
        DensityArtifact {
            y: 1e-6,
            total_mass: 0.1 + 0.2,
            atom_mass: 0.5,
            atom_lower_bound: 0.25,
            newton_iterations: 1234,
            basins_chained: 56,
            window_covers_support: true,
            x: vec![1e-4, 0.1 + 0.7, std::f64::consts::PI],
            rho: vec![0.0, 1.0 / 3.0, 2.5e-300],
        }
    }

    #[test]
    fn density_round_trips_exactly_in_both_formats() {
        let a = sample();
        for f in [Format::Csv, Format::Json] {
            assert_eq!(DensityArtifact::parse(&a.render(f).unwrap()).unwrap(), a);
        }
    }

    #[test]
    fn csv_layout() {
        let text = sample().render(Format::Csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# y=1e-6");
        assert_eq!(lines[7], "x,rho");
        assert_eq!(lines[9], "0.7999999999999999,0.3333333333333333");
        assert_eq!(lines[10], "3.141592653589793,2.5e-300");
    }

    #[test]
    fn quantiles_round_trip() {
        let table = QuantileTable {
            probs: vec![0.1, 0.9],
            values: vec![0.123456789012345, 6.897705286129633],
        };
        let a = QuantileArtifact::new(&table, 0.5);
        for f in [Format::Csv, Format::Json] {
            assert_eq!(QuantileArtifact::parse(&a.render(f).unwrap()).unwrap(), a);
        }
    }

    #[test]
    fn malformed_tables_are_rejected() {
        assert!(DensityArtifact::parse("x,rho\n1,2\n").is_err());
        assert!(DensityArtifact::parse("# y=1\n1,2\n").is_err());
        assert!(Table::parse("a,b\n1\n", &["a", "b"]).is_err());
        assert!(Table::parse("a,b\n1,zz\n", &["a", "b"]).is_err());
    }

    #[test]
    fn emit_replaces_the_target() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        emit(Some(&path), "first\n").unwrap();
        emit(Some(&path), "second\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "second\n");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
