use std::time::Instant;

use anyhow::{bail, Context, Result};
use freespectra::oracles::{all_roots, ks_distance, monte_carlo_spectrum};
use freespectra::{
    density_grid, grid_moments, master_from_summary, quantiles, summarize, Complex64, DensityCurve, NetworkSpec,
};
use rayon::prelude::*;

use crate::artifact::{emit, render_bench, BenchRow, DensityArtifact, QuantileArtifact, ValidationReport};
use crate::config::RunConfig;

/// Largest Kolmogorov-Smirnov distance accepted by `validate`.
pub const KS_THRESHOLD: f64 = 0.08;

fn curve_for(cfg: &RunConfig) -> Result<DensityCurve> {
    let xs = cfg.grid.build(&cfg.network)?;
    Ok(density_grid(&cfg.network, &xs, cfg.y, &cfg.solver)?)
}

pub fn density(cfg: &RunConfig) -> Result<()> {
    let curve = curve_for(cfg)?;
    let covers = grid_moments(&curve).window_covers_support;
    if !covers {
        eprintln!("warning: the density is still non-negligible at x_max; the window may not cover the support");
    }
    let text = DensityArtifact::new(&curve, covers).render(cfg.output.format)?;
    emit(cfg.output.path.as_deref(), &text)
}

/// Flat density on `[0, x_max]`, for checking the quantile pipeline.
pub fn uniform_curve(x_max: f64, points: usize) -> Result<DensityCurve> {
    if !(x_max > 0.0 && x_max.is_finite()) {
        bail!("--uniform needs a positive width, got {x_max}");
    }
    let xs: Vec<f64> = (0..points).map(|i| x_max * i as f64 / (points - 1) as f64).collect();
    let rhos = vec![1.0 / x_max; points];
    Ok(DensityCurve::from_samples(xs, rhos, 1e-9, 0.0, 0.0)?)
}

pub fn quantiles_of(curve: &DensityCurve, cfg: &RunConfig) -> Result<()> {
    let table = quantiles(curve, &cfg.probs)?;
    let artifact = QuantileArtifact::new(&table, curve.atom_mass);
    emit(cfg.output.path.as_deref(), &artifact.render(cfg.output.format)?)?;
    if cfg.output.path.is_some() {
        for ((p, q), l) in artifact
            .probs
            .iter()
            .zip(&artifact.quantiles)
            .zip(&artifact.log10_quantiles)
        {
            println!("p={p} quantile={q:?} log10={l:?}");
        }
    }
    Ok(())
}

pub fn quantiles_cmd(cfg: &RunConfig) -> Result<()> {
    quantiles_of(&curve_for(cfg)?, cfg)
}

/// Returns whether the Monte-Carlo spectrum agreed with the curve.
pub fn validate(cfg: &RunConfig) -> Result<bool> {
    if !cfg.mc.enabled {
        bail!("validation requires mc.enabled");
    }
    let curve = curve_for(cfg)?;
    let emp = monte_carlo_spectrum(&cfg.network, cfg.mc.n0, cfg.mc.seed)?;
    let ks = ks_distance(&emp, &curve)?;
    let report = ValidationReport {
        n0: cfg.mc.n0,
        seed: cfg.mc.seed,
        ks_distance: ks,
        threshold: KS_THRESHOLD,
        passed: ks <= KS_THRESHOLD,
    };
    emit(cfg.output.path.as_deref(), &report.render(cfg.output.format)?)?;
    eprintln!(
        "{}: KS distance {ks:.4} against threshold {KS_THRESHOLD}",
        if report.passed { "pass" } else { "fail" }
    );
    Ok(report.passed)
}

/// The configured layers repeated cyclically up to `depth`.
fn with_depth(spec: &NetworkSpec, depth: usize) -> Result<NetworkSpec> {
    if depth == 0 {
        bail!("depths must be positive");
    }
    let layers = spec.layers.iter().copied().cycle().take(depth).collect();
    Ok(NetworkSpec::new(layers, spec.input_mean_square)?)
}

fn millis(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn bench_network(spec: &NetworkSpec, cfg: &RunConfig) -> Result<Vec<BenchRow>> {
    let xs = cfg.grid.build(spec)?;
    let points = xs.len();
    let meq = master_from_summary(&summarize(spec)?)?;
    let degree = meq.degree();
    let row = |stage: &str, wall_ms: f64, iterations: usize| BenchRow {
        stage: stage.to_string(),
        depth: spec.depth(),
        degree,
        points,
        wall_ms,
        iterations,
        iterations_per_point: iterations as f64 / points as f64,
    };
    let mut rows = Vec::new();

    let start = Instant::now();
    let curve = density_grid(spec, &xs, cfg.y, &cfg.solver)?;
    rows.push(row("lilypads", millis(start), curve.stats.newton_iterations));

    let start = Instant::now();
    let sweeps = xs
        .par_iter()
        .map(|&x| {
            all_roots(&meq, Complex64::new(x, cfg.y))
                .map(|r| r.iterations)
                .with_context(|| format!("all-roots baseline at x = {x}"))
        })
        .collect::<Result<Vec<_>>>()?;
    rows.push(row("all_roots", millis(start), sweeps.iter().sum()));

    if cfg.mc.enabled {
        let start = Instant::now();
        monte_carlo_spectrum(spec, cfg.mc.n0, cfg.mc.seed)?;
        let mut r = row("monte_carlo", millis(start), 0);
        r.points = cfg.mc.n0;
        r.iterations_per_point = 0.0;
        rows.push(r);
    }
    Ok(rows)
}

pub fn bench(cfg: &RunConfig, depths: &[usize]) -> Result<()> {
    let networks = if depths.is_empty() {
        vec![cfg.network.clone()]
    } else {
        depths
            .iter()
            .map(|&d| with_depth(&cfg.network, d))
            .collect::<Result<_>>()?
    };
    let mut rows = Vec::new();
    for spec in &networks {
        rows.extend(bench_network(spec, cfg)?);
    }
    emit(cfg.output.path.as_deref(), &render_bench(&rows, cfg.output.format)?)
}
