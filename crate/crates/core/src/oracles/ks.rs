//! Kolmogorov–Smirnov distance between a sample and a model CDF.

use crate::error::Result;
use crate::oracles::monte_carlo::EmpiricalSpectrum;
use crate::spectrum::DensityCurve;

/// `sup |F_emp - F|` over the sample points, checking both one-sided limits
/// of the empirical CDF. `cdf_left(x)` is the left limit of the model CDF,
/// which differs from `cdf(x)` only at atoms.
pub fn ks_distance_to_cdf(sorted: &[f64], cdf: impl Fn(f64) -> f64, cdf_left: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    let mut worst = 0.0_f64;
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        worst = worst
            .max((cdf_left(x) - i as f64 / n).abs())
            .max((cdf(x) - j as f64 / n).abs());
        i = j;
    }
    worst
}

/// KS distance from a Monte-Carlo spectrum to the full law of a curve, the
/// atom at zero included.
pub fn ks_distance(emp: &EmpiricalSpectrum, curve: &DensityCurve) -> Result<f64> {
    let cdf = curve.continuous_cdf()?;
    let atom = curve.atom_mass;
    let full = |x: f64| {
        if x < 0.0 {
            0.0
        } else {
            atom + (1.0 - atom) * cdf.eval(x)
        }
    };
    let left = |x: f64| if x <= 0.0 { 0.0 } else { full(x) };
    Ok(ks_distance_to_cdf(&emp.values, full, left))
}
