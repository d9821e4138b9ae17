//! Inversion of `z = P(m)/Q(m)` on the physical branch.
//!
//! [`newton_raphson`] is the local scheme on `φ_z(m) = P(m)/z - Q(m)`.
//! [`is_in_basin`] checks Kantorovich's criterion `h = δκλ < 1/2`, which
//! guarantees quadratic convergence from the start point. [`newton_lilypads`]
//! chains certified basins: it first doubles `Im z` until `m = 0` is
//! certified, then walks back to the target, halving the step until the
//! current root certifies at the next point.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracles::roots::all_roots;
use crate::transform::{eval_phi, second_derivative_bound, RationalMasterEq};

/// Relative distance to the target below which the dichotomy snaps onto it.
const TARGET_SNAP: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Newton stops once `|φ_z(m)| < epsilon`.
    pub epsilon: f64,
    pub max_newton_iters: usize,
    pub max_doublings: usize,
    /// Smallest dichotomy step, relative to the initial distance to the target.
    pub min_step_fraction: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-12,
            max_newton_iters: 100,
            max_doublings: 60,
            min_step_fraction: 2f64.powi(-60),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon >= 1e-15) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be at least 1e-15, got {}",
                self.epsilon
            )));
        }
        if self.max_newton_iters == 0 || self.max_doublings == 0 {
            return Err(Error::InvalidConfig("iteration caps must be positive".into()));
        }
        if !(self.min_step_fraction > 0.0 && self.min_step_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "min_step_fraction must lie in (0, 1), got {}",
                self.min_step_fraction
            )));
        }
        Ok(())
    }
}

/// Kantorovich data at a start point `m₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BasinCertificate {
    /// `|φ(m₀)/φ'(m₀)|`, the length of the first Newton step.
    pub delta: f64,
    /// `1/|φ'(m₀)|`.
    pub kappa: f64,
    /// Bound on `|φ''|` over the disc of radius `2δ` around `m₀`.
    pub lambda_bound: f64,
    pub h: f64,
    /// Radius `2δ / (1 + √(1 - h))` of the ball holding the iterates.
    pub t_star: f64,
}

/// Kantorovich's criterion for `φ_z` at `m0`. `None` means "not certified",
/// not "divergent".
///
/// `λ` is bounded over the disc of radius `2δ ≥ t*`, which removes the
/// circular dependence of `t*` on `λ`.
pub fn is_in_basin(meq: &RationalMasterEq, z: Complex64, m0: Complex64) -> Option<BasinCertificate> {
    let (value, deriv) = eval_phi(meq, z, m0);
    let deriv_norm = deriv.norm();
    if !(deriv_norm > 0.0 && deriv_norm.is_finite() && value.norm().is_finite()) {
        return None;
    }
    let kappa = 1.0 / deriv_norm;
    let delta = value.norm() * kappa;
    let lambda_bound = second_derivative_bound(meq, z, m0, 2.0 * delta);
    let h = delta * kappa * lambda_bound;
    if !(h < 0.5) {
        return None;
    }
    Some(BasinCertificate {
        delta,
        kappa,
        lambda_bound,
        h,
        t_star: 2.0 * delta / (1.0 + (1.0 - h).sqrt()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOutcome {
    pub root: Complex64,
    pub iterations: usize,
    pub residual: f64,
}

/// Plain Newton-Raphson on `φ_z` from `m0` until `|φ_z(m)| < ε`.
///
/// Intended for certified starts; from an uncertified start it may fail or
/// land on any root.
pub fn newton_raphson(
    meq: &RationalMasterEq,
    z: Complex64,
    m0: Complex64,
    config: &SolverConfig,
) -> Result<NewtonOutcome> {
    let mut m = m0;
    let mut residual = f64::INFINITY;
    for iterations in 0..=config.max_newton_iters {
        let (value, deriv) = eval_phi(meq, z, m);
        residual = value.norm();
        if residual < config.epsilon {
            return Ok(NewtonOutcome {
                root: m,
                iterations,
                residual,
            });
        }
        if iterations == config.max_newton_iters {
            break;
        }
        if !(deriv.norm() > 0.0) || !deriv.norm().is_finite() {
            return Err(Error::DerivativeUnderflow { m });
        }
        m -= value / deriv;
    }
    Err(Error::NewtonMaxIterations {
        iterations: config.max_newton_iters,
        m,
        residual,
    })
}

/// Work counters of one or more lilypad solves.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SolveStats {
    pub newton_iterations: usize,
    /// Certified basins visited, i.e. Newton solves performed.
    pub basins: usize,
    pub doublings: usize,
    pub halvings: usize,
    /// Solves that had to fall back to the all-roots oracle.
    pub fallbacks: usize,
}

impl SolveStats {
    pub fn absorb(&mut self, other: &SolveStats) {
        self.newton_iterations += other.newton_iterations;
        self.basins += other.basins;
        self.doublings += other.doublings;
        self.halvings += other.halvings;
        self.fallbacks += other.fallbacks;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LilypadSolution {
    /// `M(z_objective)`.
    pub m: Complex64,
    pub stats: SolveStats,
}

fn newton_counted(
    meq: &RationalMasterEq,
    z: Complex64,
    m: Complex64,
    config: &SolverConfig,
    stats: &mut SolveStats,
) -> Result<Complex64> {
    let out = newton_raphson(meq, z, m, config)?;
    stats.newton_iterations += out.iterations;
    stats.basins += 1;
    Ok(out.root)
}

/// Doubles `Im z` from the target until `m = 0` is certified, then solves there.
fn cold_start(
    meq: &RationalMasterEq,
    target: Complex64,
    config: &SolverConfig,
    stats: &mut SolveStats,
) -> Result<(Complex64, Complex64)> {
    let zero = Complex64::default();
    let mut z = target;
    let mut doublings = 0;
    while is_in_basin(meq, z, zero).is_none() {
        if doublings == config.max_doublings {
            return Err(Error::DoublingCapExceeded { doublings, z });
        }
        z = Complex64::new(z.re, 2.0 * z.im);
        doublings += 1;
    }
    stats.doublings += doublings;
    let m = newton_counted(meq, z, zero, config, stats)?;
    Ok((z, m))
}

/// Walks from the solved pair `(z, m)` to `target` by certified steps.
fn descend(
    meq: &RationalMasterEq,
    target: Complex64,
    mut z: Complex64,
    mut m: Complex64,
    config: &SolverConfig,
    stats: &mut SolveStats,
) -> Result<Complex64> {
    let initial = (target - z).norm();
    while z != target {
        let remaining = target - z;
        if remaining.norm() <= TARGET_SNAP * target.norm() {
            z = target;
            m = newton_counted(meq, z, m, config, stats)?;
            break;
        }
        let mut step = remaining;
        let mut next = target;
        while is_in_basin(meq, next, m).is_none() {
            step *= 0.5;
            stats.halvings += 1;
            if step.norm() < config.min_step_fraction * initial {
                return Err(Error::DichotomyStalled { z, m, target });
            }
            next = z + step;
        }
        z = next;
        m = newton_counted(meq, z, m, config, stats)?;
    }
    Ok(m)
}

/// Root of `φ_target` among all roots with non-negative density, closest to
/// `near`.
fn physical_root_near(meq: &RationalMasterEq, target: Complex64, near: Complex64) -> Result<Complex64> {
    let roots = all_roots(meq, target)?;
    roots
        .roots
        .iter()
        .copied()
        .filter(|r| -((r + 1.0) / target).im >= -1e-10)
        .min_by(|a, b| (a - near).norm().total_cmp(&(b - near).norm()))
        .ok_or(Error::DichotomyStalled {
            z: target,
            m: near,
            target,
        })
}

/// `M(z_objective)` on the branch with `M(z) → 0` as `z → ∞`.
///
/// With a proxy `(z₀, m₀)` (a solved point on the same branch, typically the
/// previous grid point) the doubling phase is skipped. If the dichotomy
/// stalls, the solve is retried cold, and as a last resort the all-roots
/// oracle supplies the start; that event is counted in
/// [`SolveStats::fallbacks`].
pub fn newton_lilypads(
    meq: &RationalMasterEq,
    z_objective: Complex64,
    proxy: Option<(Complex64, Complex64)>,
    config: &SolverConfig,
) -> Result<LilypadSolution> {
    if !(z_objective.im > 0.0) || !z_objective.re.is_finite() || !z_objective.im.is_finite() {
        return Err(Error::NotUpperHalfPlane { z: z_objective });
    }
    let mut stats = SolveStats::default();

    let warm = proxy.map(|(z0, m0)| descend(meq, z_objective, z0, m0, config, &mut stats));
    let result = match warm {
        Some(Ok(m)) => Ok(m),
        Some(Err(Error::DichotomyStalled { .. } | Error::NewtonMaxIterations { .. })) | None => {
            cold_start(meq, z_objective, config, &mut stats)
                .and_then(|(z, m)| descend(meq, z_objective, z, m, config, &mut stats))
        }
        Some(Err(e)) => Err(e),
    };

    let m = match result {
        Ok(m) => m,
        Err(Error::DichotomyStalled { m: last, .. }) => {
            stats.fallbacks += 1;
            let start = physical_root_near(meq, z_objective, last)?;
            newton_counted(meq, z_objective, start, config, &mut stats)?
        }
        Err(e) => return Err(e),
    };
    Ok(LilypadSolution { m, stats })
}

/// Density `-Im G(z)/π` with `G = (M + 1)/z`.
pub fn density_from_m(z: Complex64, m: Complex64) -> f64 {
    -((m + 1.0) / z).im / std::f64::consts::PI
}
