//! Density curves by Stieltjes inversion, quantiles and moment checks.
//!
//! The limiting law may carry an atom at zero. Every grid excludes `x = 0`,
//! and the Cauchy-smoothed image of the atom, `a y / (π (x² + y²))`, is
//! removed before integrating, so quantiles and moments refer to the
//! absolutely continuous part. Mass that falls below the first grid point is
//! modelled by a power law `A (x/x₀)^β` matched to the density at `x₀`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{atom_lower_bound, atom_mass, summarize, LayerSummary, NetworkSpec};
use crate::solver::{density_from_m, newton_lilypads, SolveStats, SolverConfig};
use crate::transform::{master_from_summary, RationalMasterEq};

/// Grid points solved sequentially with warm starts; chunks run in parallel.
pub const CHUNK_SIZE: usize = 64;

const CLAMP_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub points: usize,
    pub log_spaced: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            x_min: None,
            x_max: None,
            points: 200,
            log_spaced: true,
        }
    }
}

impl GridSpec {
    /// Grid abscissae, filling missing bounds from the default window.
    pub fn build(&self, spec: &NetworkSpec) -> Result<Vec<f64>> {
        let (lo, hi) = match (self.x_min, self.x_max) {
            (Some(lo), Some(hi)) => (lo, hi),
            (lo, hi) => {
                let (d_lo, d_hi) = default_window(spec)?;
                (lo.unwrap_or(d_lo), hi.unwrap_or(d_hi))
            }
        };
        make_grid(lo, hi, self.points, self.log_spaced)
    }
}

/// `x_min = m₁·10⁻⁴` and `x_max = max(m₁ + 10 sd, 1.2 x₊)`, where `x₊` is
/// the right edge of the support.
pub fn default_window(spec: &NetworkSpec) -> Result<(f64, f64)> {
    let layers = summarize(spec)?;
    let moments = moments_from_summary(&layers);
    let meq = master_from_summary(&layers)?;
    let hi = (moments.m1 + 10.0 * moments.variance.sqrt()).max(1.2 * right_edge(&meq));
    Ok((moments.m1 * 1e-4, hi))
}

pub fn make_grid(x_min: f64, x_max: f64, points: usize, log_spaced: bool) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::InvalidGrid(format!("need at least 2 points, got {points}")));
    }
    if !(x_min > 0.0 && x_max > x_min && x_max.is_finite()) {
        return Err(Error::InvalidGrid(format!(
            "window must satisfy 0 < x_min < x_max, got [{x_min}, {x_max}]"
        )));
    }
    let last = (points - 1) as f64;
    let xs: Vec<f64> = if log_spaced {
        let (a, b) = (x_min.ln(), x_max.ln());
        (0..points).map(|i| (a + (b - a) * i as f64 / last).exp()).collect()
    } else {
        (0..points).map(|i| x_min + (x_max - x_min) * i as f64 / last).collect()
    };
    let mut xs = xs;
    xs[0] = x_min;
    xs[points - 1] = x_max;
    Ok(xs)
}

/// Right edge of the support: `min_{m > 0} M⁻¹(m)`.
pub fn right_edge(meq: &RationalMasterEq) -> f64 {
    let f = |t: f64| meq.eval(Complex64::new(t.exp(), 0.0)).re;
    let (lo, hi, steps) = (-30.0_f64, 30.0_f64, 600);
    let h = (hi - lo) / steps as f64;
    let best = (0..=steps)
        .map(|i| lo + h * i as f64)
        .min_by(|a, b| f(*a).total_cmp(&f(*b)))
        .unwrap_or(0.0);
    // golden section on the bracketing cell pair
    let (mut a, mut b) = (best - h, best + h);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    for _ in 0..100 {
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - r * (b - a);
        d = a + r * (b - a);
    }
    f(0.5 * (a + b))
}

/// Order in which each chunk of the grid is swept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Traversal {
    #[default]
    Forward,
    Backward,
}

/// Smoothed density `ρ(x) = -Im G(x + iy)/π` sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityCurve {
    pub xs: Vec<f64>,
    pub rhos: Vec<f64>,
    pub y: f64,
    /// Trapezoid integral of `rhos`.
    pub total_mass: f64,
    /// Exact atom at zero of the limiting law.
    pub atom_mass: f64,
    /// Width-only lower bound on the atom.
    pub atom_lower_bound: f64,
    pub stats: SolveStats,
}

impl DensityCurve {
    /// Curve from raw samples; negative densities within tolerance are clamped.
    pub fn from_samples(xs: Vec<f64>, rhos: Vec<f64>, y: f64, atom_mass: f64, atom_lower_bound: f64) -> Result<Self> {
        if xs.len() != rhos.len() || xs.len() < 2 {
            return Err(Error::InvalidGrid(
                "need at least two (x, rho) pairs of equal length".into(),
            ));
        }
        if !(y > 0.0) {
            return Err(Error::InvalidGrid(format!("y must be positive, got {y}")));
        }
        if xs[0] < 0.0 || xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid(
                "xs must be non-negative and strictly increasing".into(),
            ));
        }
        if !(0.0..1.0).contains(&atom_mass) {
            return Err(Error::InvalidGrid(format!("atom mass {atom_mass} outside [0, 1)")));
        }
        let rhos = rhos
            .into_iter()
            .map(|r| {
                if r.is_finite() && r >= -CLAMP_TOLERANCE {
                    Ok(r.max(0.0))
                } else {
                    Err(Error::InvalidGrid(format!("invalid density value {r}")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let total_mass = trapezoid(&xs, &rhos);
        Ok(Self {
            xs,
            rhos,
            y,
            total_mass,
            atom_mass,
            atom_lower_bound,
            stats: SolveStats::default(),
        })
    }

    /// `ρ` minus the smoothed atom, clamped at zero.
    pub fn continuous_density(&self) -> Vec<f64> {
        let a = self.atom_mass;
        let y = self.y;
        self.xs
            .iter()
            .zip(&self.rhos)
            .map(|(&x, &r)| (r - a * y / (std::f64::consts::PI * (x * x + y * y))).max(0.0))
            .collect()
    }

    /// Trapezoid mass of [`Self::continuous_density`] inside the window.
    pub fn continuous_mass(&self) -> f64 {
        trapezoid(&self.xs, &self.continuous_density())
    }

    /// CDF of the absolutely continuous part.
    pub fn continuous_cdf(&self) -> Result<ContinuousCdf> {
        ContinuousCdf::new(self)
    }

    /// CDF of the whole law, atom included.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        let cdf = self.continuous_cdf()?;
        Ok(if x < 0.0 {
            0.0
        } else {
            self.atom_mass + (1.0 - self.atom_mass) * cdf.eval(x)
        })
    }
}

fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// Normalized CDF of the absolutely continuous part of a [`DensityCurve`].
///
/// Inside the window it is built from the right, so the tail is exact up to
/// trapezoid error. Below the first grid point it follows `A (x/x₀)^β`, with
/// `A` the mass unaccounted for and `β = ρ(x₀) x₀ / A`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousCdf {
    xs: Vec<f64>,
    values: Vec<f64>,
    below: f64,
    beta: f64,
}

impl ContinuousCdf {
    fn new(curve: &DensityCurve) -> Result<Self> {
        let rho = curve.continuous_density();
        let expected = 1.0 - curve.atom_mass;
        let n = curve.xs.len();
        let mut tail = vec![0.0; n];
        for i in (0..n - 1).rev() {
            tail[i] = tail[i + 1] + 0.5 * (curve.xs[i + 1] - curve.xs[i]) * (rho[i] + rho[i + 1]);
        }
        let captured = tail[0];
        if !(captured >= 0.5 * expected) {
            return Err(Error::WindowMissesBulk {
                mass: captured,
                expected,
            });
        }
        let below = (expected - captured).max(0.0);
        let total = below + captured;
        let values = tail.iter().map(|t| (below + captured - t) / total).collect();
        let beta = if below > 0.0 {
            (rho[0] * curve.xs[0] / below).clamp(1e-3, 1.0)
        } else {
            1.0
        };
        Ok(Self {
            xs: curve.xs.clone(),
            values,
            below: below / total,
            beta,
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let x0 = self.xs[0];
        if x <= 0.0 {
            return 0.0;
        }
        if x < x0 {
            return self.below * (x / x0).powf(self.beta);
        }
        let i = self.xs.partition_point(|&v| v <= x);
        if i >= self.xs.len() {
            return 1.0;
        }
        let (xa, xb) = (self.xs[i - 1], self.xs[i]);
        let (fa, fb) = (self.values[i - 1], self.values[i]);
        fa + (fb - fa) * (x - xa) / (xb - xa)
    }

    /// Smallest `x` with `F(x) = p`, by linear interpolation.
    pub fn inverse(&self, p: f64) -> f64 {
        if p <= self.values[0] {
            return self.xs[0] * (p / self.below).powf(1.0 / self.beta);
        }
        let i = self.values.partition_point(|&v| v < p).min(self.values.len() - 1);
        let (xa, xb) = (self.xs[i - 1], self.xs[i]);
        let (fa, fb) = (self.values[i - 1], self.values[i]);
        xa + (xb - xa) * (p - fa) / (fb - fa)
    }
}

fn solve_chunk(
    meq: &RationalMasterEq,
    xs: &[f64],
    y: f64,
    config: &SolverConfig,
    traversal: Traversal,
) -> Result<(Vec<f64>, SolveStats)> {
    let order: Vec<usize> = match traversal {
        Traversal::Forward => (0..xs.len()).collect(),
        Traversal::Backward => (0..xs.len()).rev().collect(),
    };
    let mut rhos = vec![0.0; xs.len()];
    let mut stats = SolveStats::default();
    let mut proxy = None;
    for i in order {
        let z = Complex64::new(xs[i], y);
        let sol = newton_lilypads(meq, z, proxy, config).map_err(|e| Error::GridPoint {
            x: xs[i],
            source: Box::new(e),
        })?;
        stats.absorb(&sol.stats);
        rhos[i] = density_from_m(z, sol.m);
        proxy = Some((z, sol.m));
    }
    Ok((rhos, stats))
}

/// Density of the limiting law at `x + iy` for every `x` in `xs`.
pub fn density_grid(spec: &NetworkSpec, xs: &[f64], y: f64, config: &SolverConfig) -> Result<DensityCurve> {
    density_grid_with(spec, xs, y, config, Traversal::Forward)
}

pub fn density_grid_with(
    spec: &NetworkSpec,
    xs: &[f64],
    y: f64,
    config: &SolverConfig,
    traversal: Traversal,
) -> Result<DensityCurve> {
    if !(y > 0.0 && y.is_finite()) {
        return Err(Error::InvalidGrid(format!("y must be positive, got {y}")));
    }
    if xs.len() < 2 || !(xs[0] > 0.0) || xs.windows(2).any(|w| !(w[1] > w[0])) || !xs[xs.len() - 1].is_finite() {
        return Err(Error::InvalidGrid(
            "xs must hold at least two strictly increasing positive values".into(),
        ));
    }
    config.validate()?;
    let layers = summarize(spec)?;
    let meq = master_from_summary(&layers)?;
    density_from_master(&meq, &layers, xs, y, config, traversal)
}

fn density_from_master(
    meq: &RationalMasterEq,
    layers: &[LayerSummary],
    xs: &[f64],
    y: f64,
    config: &SolverConfig,
    traversal: Traversal,
) -> Result<DensityCurve> {
    let chunks: Vec<Result<(Vec<f64>, SolveStats)>> = xs
        .par_chunks(CHUNK_SIZE)
        .map(|chunk| solve_chunk(meq, chunk, y, config, traversal))
        .collect();
    let mut rhos = Vec::with_capacity(xs.len());
    let mut stats = SolveStats::default();
    for chunk in chunks {
        let (r, s) = chunk?;
        rhos.extend(r);
        stats.absorb(&s);
    }
    let mut curve = DensityCurve::from_samples(xs.to_vec(), rhos, y, atom_mass(layers), atom_lower_bound(layers))?;
    curve.stats = stats;
    Ok(curve)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantileTable {
    pub probs: Vec<f64>,
    pub values: Vec<f64>,
}

/// Quantiles of the absolutely continuous part of the curve.
pub fn quantiles(curve: &DensityCurve, probs: &[f64]) -> Result<QuantileTable> {
    if let Some(&p) = probs.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
        return Err(Error::InvalidProbability(p));
    }
    let cdf = curve.continuous_cdf()?;
    Ok(QuantileTable {
        probs: probs.to_vec(),
        values: probs.iter().map(|&p| cdf.inverse(p)).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub m1: f64,
    pub variance: f64,
}

/// `m₁ = ∏ c_ℓ σ²_ℓ` and `m₂ - m₁² = m₁² Σ_ℓ Λ_ℓ / c_ℓ`.
///
/// The variance is read off the constant term of `M⁻¹(m) = m₁/m + m₂/m₁ + O(m)`.
/// Per layer, the activation contributes `Λ_ℓ (1 - c_ℓ)/c_ℓ` and the weight
/// matrix `Λ_{ℓ-1} λ_ℓ = Λ_ℓ`.
pub fn closed_form_moments(spec: &NetworkSpec) -> Result<Moments> {
    Ok(moments_from_summary(&summarize(spec)?))
}

pub fn moments_from_summary(layers: &[LayerSummary]) -> Moments {
    let m1: f64 = layers.iter().map(|l| l.c * l.sigma_w_sq).product();
    let spread: f64 = layers.iter().map(|l| l.cumulative_ratio / l.c).sum();
    Moments {
        m1,
        variance: m1 * m1 * spread,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridMoments {
    pub m1: f64,
    pub m2: f64,
    /// False when the window ends less than 20% past the last point with
    /// density above `1e-6`.
    pub window_covers_support: bool,
}

impl GridMoments {
    pub fn variance(&self) -> f64 {
        self.m2 - self.m1 * self.m1
    }
}

/// Trapezoid integrals of `x ρ` and `x² ρ` over the continuous part.
///
/// The atom contributes nothing to either moment and mass below the window
/// contributes at most `x_min` times its weight, so no renormalization is
/// applied.
pub fn grid_moments(curve: &DensityCurve) -> GridMoments {
    let rho = curve.continuous_density();
    let first: Vec<f64> = curve.xs.iter().zip(&rho).map(|(x, r)| x * r).collect();
    let second: Vec<f64> = curve.xs.iter().zip(&first).map(|(x, r)| x * r).collect();
    let last_support = curve
        .xs
        .iter()
        .zip(&rho)
        .rev()
        .find(|(_, &r)| r > 1e-6)
        .map(|(x, _)| *x)
        .unwrap_or(0.0);
    GridMoments {
        m1: trapezoid(&curve.xs, &first),
        m2: trapezoid(&curve.xs, &second),
        window_covers_support: curve.xs[curve.xs.len() - 1] >= 1.2 * last_support,
    }
}
