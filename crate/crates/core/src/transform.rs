//! Rational S-transforms, the rectangular free multiplicative convolution on
//! `(measure, ratio)` pairs, and the master equation `M⁻¹ = P/Q` of the
//! network Jacobian.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::LayerSummary;
use crate::poly::ComplexPolynomial;

const COEFFICIENT_LIMIT: f64 = 1e300;

/// Inverse moment series `M⁻¹(m) = P(m) / Q(m)` of `JᵀJ`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalMasterEq {
    p: ComplexPolynomial,
    q: ComplexPolynomial,
}

impl RationalMasterEq {
    pub fn new(p: ComplexPolynomial, q: ComplexPolynomial) -> Result<Self> {
        if q.is_zero() {
            return Err(Error::InvalidRational("denominator Q is identically zero".into()));
        }
        if q.coeff(0) == Complex64::default() && p.coeff(0) == Complex64::default() {
            return Err(Error::InvalidRational(
                "P(0) = Q(0) = 0: M⁻¹ needs a simple pole at the origin".into(),
            ));
        }
        for poly in [&p, &q] {
            if !poly.all_finite() || poly.max_abs_coeff() > COEFFICIENT_LIMIT {
                return Err(Error::CoefficientOverflow {
                    magnitude: poly.max_abs_coeff(),
                });
            }
        }
        Ok(Self { p, q })
    }

    pub fn p(&self) -> &ComplexPolynomial {
        &self.p
    }

    pub fn q(&self) -> &ComplexPolynomial {
        &self.q
    }

    /// Degree of `P - zQ` for generic `z`.
    pub fn degree(&self) -> usize {
        self.p.degree().unwrap_or(0).max(self.q.degree().unwrap_or(0))
    }

    /// First moment read off the pole `M⁻¹(m) ~ m₁/m` at the origin.
    pub fn first_moment(&self) -> Complex64 {
        self.p.coeff(0) / self.q.coeff(1)
    }

    /// `M⁻¹(m)`.
    pub fn eval(&self, m: Complex64) -> Complex64 {
        self.p.eval(m) / self.q.eval(m)
    }

    /// `φ_z = P/z - Q` as a polynomial in `m`.
    pub fn phi_polynomial(&self, z: Complex64) -> ComplexPolynomial {
        let inv_z = z.inv();
        &self.p.scale(inv_z) - &self.q
    }

    /// True when the two rational functions agree: `P₁Q₂ = P₂Q₁`
    /// coefficient-wise, relative to the largest coefficient.
    pub fn equivalent(&self, other: &Self, rel_tol: f64) -> bool {
        let lhs = &self.p * &other.q;
        let rhs = &other.p * &self.q;
        let scale = lhs.max_abs_coeff().max(rhs.max_abs_coeff());
        let diff = &lhs - &rhs;
        diff.max_abs_coeff() <= rel_tol * scale
    }
}

/// S-transform of a `(measure, ratio)` pair with rational `S(m) = num/den`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalSTransform {
    pub numerator: ComplexPolynomial,
    pub denominator: ComplexPolynomial,
    pub ratio: f64,
}

impl RationalSTransform {
    pub fn new(numerator: ComplexPolynomial, denominator: ComplexPolynomial, ratio: f64) -> Result<Self> {
        if denominator.is_zero() || numerator.is_zero() {
            return Err(Error::InvalidRational("S-transform must be finite and non-zero".into()));
        }
        if !(ratio.is_finite() && ratio > 0.0) {
            return Err(Error::InvalidRational(format!("ratio must be positive, got {ratio}")));
        }
        Ok(Self {
            numerator,
            denominator,
            ratio,
        })
    }

    /// Point mass at 1 with unit ratio: `S ≡ 1`.
    pub fn identity() -> Self {
        Self {
            numerator: ComplexPolynomial::from_real(&[1.0]),
            denominator: ComplexPolynomial::from_real(&[1.0]),
            ratio: 1.0,
        }
    }

    /// Squared singular values of a `N_ℓ × N_{ℓ-1}` matrix with i.i.d.
    /// entries of variance `σ²/N_ℓ`: `S(m) = 1 / (σ² (1 + λ m))`, ratio `λ`.
    pub fn marchenko_pastur(sigma_sq: f64, lambda: f64) -> Self {
        Self {
            numerator: ComplexPolynomial::from_real(&[1.0]),
            denominator: ComplexPolynomial::linear(sigma_sq, sigma_sq * lambda),
            ratio: lambda,
        }
    }

    /// `(1 - c) δ₀ + c δ₁`, the law of a squared 0/1 activation derivative:
    /// `S(m) = (1 + m) / (c + m)`, ratio 1.
    pub fn bernoulli(c: f64) -> Self {
        Self {
            numerator: ComplexPolynomial::linear(1.0, 1.0),
            denominator: ComplexPolynomial::linear(c, 1.0),
            ratio: 1.0,
        }
    }

    pub fn eval(&self, m: Complex64) -> Complex64 {
        self.numerator.eval(m) / self.denominator.eval(m)
    }

    /// `M⁻¹(m) = (1 + m) / (m S(m))`.
    pub fn to_master_eq(&self) -> Result<RationalMasterEq> {
        let one_plus_m = ComplexPolynomial::linear(1.0, 1.0);
        RationalMasterEq::new(
            &one_plus_m * &self.denominator,
            &ComplexPolynomial::identity() * &self.numerator,
        )
    }
}

/// `(μ₁, c₁) ⊠ (μ₂, c₂) = (ν, c₁c₂)` with `S_ν(m) = S_{μ₁}(c₂ m) S_{μ₂}(m)`.
///
/// The left operand is the factor applied last (the leftmost matrix of the
/// product); its argument is dilated by the right operand's ratio.
pub fn rect_convolve(a: &RationalSTransform, b: &RationalSTransform) -> RationalSTransform {
    RationalSTransform {
        numerator: &a.numerator.rescale_argument(b.ratio) * &b.numerator,
        denominator: &a.denominator.rescale_argument(b.ratio) * &b.denominator,
        ratio: a.ratio * b.ratio,
    }
}

/// Factors of `J = D_L W_L ⋯ D_1 W_1` from left to right:
/// `[(ν_{D_L}, 1), (ν_{W_L}, λ_L), …, (ν_{D_1}, 1), (ν_{W_1}, λ_1)]`.
pub fn layer_factors(layers: &[LayerSummary]) -> Vec<RationalSTransform> {
    layers
        .iter()
        .rev()
        .flat_map(|l| {
            [
                RationalSTransform::bernoulli(l.c),
                RationalSTransform::marchenko_pastur(l.sigma_w_sq, l.lambda),
            ]
        })
        .collect()
}

/// S-transform of `JᵀJ` obtained by folding [`rect_convolve`] over the
/// layer factors.
pub fn telescoped_s_transform(layers: &[LayerSummary]) -> RationalSTransform {
    layer_factors(layers)
        .iter()
        .fold(RationalSTransform::identity(), |acc, f| rect_convolve(&acc, f))
}

/// `M⁻¹(m) = ((m + 1)/m) ∏ σ²_ℓ (c_ℓ + Λ_ℓ m)`.
pub fn master_from_summary(layers: &[LayerSummary]) -> Result<RationalMasterEq> {
    if layers.is_empty() {
        return Err(Error::InvalidNetwork("empty layer summary".into()));
    }
    let p = layers.iter().fold(ComplexPolynomial::linear(1.0, 1.0), |acc, l| {
        &acc * &ComplexPolynomial::linear(l.sigma_w_sq * l.c, l.sigma_w_sq * l.cumulative_ratio)
    });
    RationalMasterEq::new(p, ComplexPolynomial::identity())
}

/// `(φ_z(m), φ_z'(m))` with `φ_z(m) = P(m)/z - Q(m)`.
///
/// The value is evaluated with compensated Horner sums, so residuals near
/// clustered roots (small `|z|`) are not swamped by cancellation.
pub fn eval_phi(meq: &RationalMasterEq, z: Complex64, m: Complex64) -> (Complex64, Complex64) {
    let p = meq.p.eval_compensated(m);
    let q = meq.q.eval_compensated(m);
    let dp = meq.p.derivative().eval(m);
    let dq = meq.q.derivative().eval(m);
    (p / z - q, dp / z - dq)
}

/// Upper bound on `sup |φ_z''|` over the closed disc `|m - center| ≤ radius`.
///
/// Expands `φ_z''` around the centre and sums `|a_j| radiusʲ`; this never
/// exceeds the cruder origin-centred bound `Σ k(k-1)|c_k|(|center| + radius)^{k-2}`.
pub fn second_derivative_bound(meq: &RationalMasterEq, z: Complex64, center: Complex64, radius: f64) -> f64 {
    let second = meq.phi_polynomial(z).derivative().derivative();
    let shifted = second.taylor_shift(center);
    let mut bound = 0.0;
    let mut power = 1.0;
    for c in shifted.coeffs() {
        bound += c.norm() * power;
        power *= radius;
    }
    bound
}

/// Origin-centred coefficient bound, kept for comparison.
pub fn coarse_second_derivative_bound(meq: &RationalMasterEq, z: Complex64, center: Complex64, radius: f64) -> f64 {
    let phi = meq.phi_polynomial(z);
    let reach = center.norm() + radius;
    phi.coeffs()
        .iter()
        .enumerate()
        .skip(2)
        .map(|(k, c)| (k * (k - 1)) as f64 * c.norm() * reach.powi(k as i32 - 2))
        .sum()
}

/// Coefficients of `P` and `Q` as plain numbers, for reports.
#[derive(Debug, Clone, Serialize)]
pub struct MasterEqCoefficients {
    pub p: Vec<[f64; 2]>,
    pub q: Vec<[f64; 2]>,
}

impl From<&RationalMasterEq> for MasterEqCoefficients {
    fn from(meq: &RationalMasterEq) -> Self {
        let pairs = |p: &ComplexPolynomial| p.coeffs().iter().map(|c| [c.re, c.im]).collect();
        Self {
            p: pairs(&meq.p),
            q: pairs(&meq.q),
        }
    }
}
