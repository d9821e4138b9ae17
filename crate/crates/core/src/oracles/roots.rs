//! All roots of `φ_z(m) = P(m)/z - Q(m)` by Aberth–Ehrlich iteration.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poly::ComplexPolynomial;
use crate::transform::RationalMasterEq;

const MAX_ITERATIONS: usize = 500;
const POLISH_ITERATIONS: usize = 50;
const RESIDUAL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct RootSet {
    pub roots: Vec<Complex64>,
    /// Aberth sweeps used.
    pub iterations: usize,
}

impl RootSet {
    /// Distance from `m` to the closest root.
    pub fn distance_to(&self, m: Complex64) -> f64 {
        self.roots.iter().map(|r| (r - m).norm()).fold(f64::INFINITY, f64::min)
    }
}

/// Roots of `P - zQ`, which coincide with those of `φ_z`.
pub fn all_roots(meq: &RationalMasterEq, z: Complex64) -> Result<RootSet> {
    if !(z.im > 0.0) {
        return Err(Error::NotUpperHalfPlane { z });
    }
    polynomial_roots(&meq.phi_polynomial(z))
}

/// Scale against which a residual at `m` is judged: `Σ |a_k| |m|ᵏ`.
fn evaluation_scale(p: &ComplexPolynomial, m: Complex64) -> f64 {
    let r = m.norm();
    p.coeffs().iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
}

/// All roots of a non-constant polynomial, with multiplicity.
///
/// Each root is Newton-polished afterwards; the residual must fall below
/// `1e-10` relative to the magnitude of the terms being summed.
pub fn polynomial_roots(p: &ComplexPolynomial) -> Result<RootSet> {
    let n = match p.degree() {
        Some(d) if d >= 1 => d,
        _ => return Err(Error::InvalidRational("polynomial has no roots".into())),
    };
    let lead = p.coeff(n);
    let monic = p.scale(lead.inv());
    if n == 1 {
        return Ok(RootSet {
            roots: vec![-monic.coeff(0)],
            iterations: 0,
        });
    }
    let deriv = monic.derivative();

    // Cauchy bound on the root moduli sets the initial circle.
    let radius = 1.0 + (0..n).map(|k| monic.coeff(k).norm()).fold(0.0, f64::max);
    let radius = radius.min(1e150);
    let centre = -monic.coeff(n - 1) / n as f64;
    let mut roots: Vec<Complex64> = (0..n)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
            centre + Complex64::from_polar(0.5 * radius, angle)
        })
        .collect();

    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut largest = 0.0_f64;
        for i in 0..n {
            let zi = roots[i];
            let value = monic.eval(zi);
            if value == Complex64::default() {
                continue;
            }
            let ratio = value / deriv.eval(zi);
            let repulsion: Complex64 = (0..n).filter(|&j| j != i).map(|j| (zi - roots[j]).inv()).sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if step.re.is_finite() && step.im.is_finite() {
                roots[i] = zi - step;
                largest = largest.max(step.norm() / (1.0 + zi.norm()));
            }
        }
        if largest < 1e-15 {
            break;
        }
    }

    for root in &mut roots {
        for _ in 0..POLISH_ITERATIONS {
            let v = monic.eval_compensated(*root);
            let d = deriv.eval(*root);
            if v.norm() <= 1e-3 * RESIDUAL_TOLERANCE * evaluation_scale(&monic, *root) || d.norm() == 0.0 {
                break;
            }
            let next = *root - v / d;
            if monic.eval_compensated(next).norm() >= v.norm() {
                break;
            }
            *root = next;
        }
    }
    let accurate = roots
        .iter()
        .all(|&r| p.eval_compensated(r).norm() <= RESIDUAL_TOLERANCE * evaluation_scale(p, r).max(1.0));
    if !accurate {
        return Err(Error::RootsNotConverged { iterations });
    }
    Ok(RootSet { roots, iterations })
}
