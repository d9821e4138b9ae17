//! Dense complex polynomials in ascending coefficient order.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

/// `Σ coeffs[k] mᵏ`, with trailing zeros trimmed. The zero polynomial has no
/// coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComplexPolynomial {
    coeffs: Vec<Complex64>,
}

impl ComplexPolynomial {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.last().is_some_and(|c| *c == Complex64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    /// `c0 + c1 m`.
    pub fn linear(c0: f64, c1: f64) -> Self {
        Self::from_real(&[c0, c1])
    }

    /// The monomial `m`.
    pub fn identity() -> Self {
        Self::linear(0.0, 1.0)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of `mᵏ`, zero beyond the degree.
    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn eval(&self, m: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::default(), |acc, &c| acc * m + c)
    }

    /// Value and first derivative in a single Horner pass.
    pub fn eval_with_derivative(&self, m: Complex64) -> (Complex64, Complex64) {
        let mut value = Complex64::default();
        let mut deriv = Complex64::default();
        for &c in self.coeffs.iter().rev() {
            deriv = deriv * m + value;
            value = value * m + c;
        }
        (value, deriv)
    }

    /// Horner evaluation carried out in double-double arithmetic, then
    /// rounded. Accurate to a few ulps of the result even when the terms
    /// cancel heavily, e.g. next to a cluster of roots.
    pub fn eval_compensated(&self, m: Complex64) -> Complex64 {
        let mut re = Dd::ZERO;
        let mut im = Dd::ZERO;
        for c in self.coeffs.iter().rev() {
            let next_re = re.mul(m.re).sub(im.mul(m.im)).add_f(c.re);
            let next_im = re.mul(m.im).add(im.mul(m.re)).add_f(c.im);
            re = next_re;
            im = next_im;
        }
        Complex64::new(re.hi + re.lo, im.hi + im.lo)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// `m ↦ p(s m)`.
    pub fn rescale_argument(&self, s: f64) -> Self {
        let mut power = 1.0;
        Self::new(
            self.coeffs
                .iter()
                .map(|&c| {
                    let out = c * power;
                    power *= s;
                    out
                })
                .collect(),
        )
    }

    /// Coefficients of `p(center + t)` in powers of `t` (Taylor shift by
    /// repeated synthetic division).
    pub fn taylor_shift(&self, center: Complex64) -> Self {
        let mut a = self.coeffs.clone();
        let n = a.len();
        for i in 0..n {
            for j in (i..n.saturating_sub(1)).rev() {
                let next = a[j + 1];
                a[j] += center * next;
            }
        }
        Self::new(a)
    }

    pub fn all_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`.
#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn fast_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd { hi: s, lo: b - (s - a) }
}

impl Dd {
    const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        fast_two_sum(s, e + self.lo + o.lo)
    }

    fn sub(self, o: Dd) -> Dd {
        self.add(Dd { hi: -o.hi, lo: -o.lo })
    }

    fn add_f(self, b: f64) -> Dd {
        let (s, e) = two_sum(self.hi, b);
        fast_two_sum(s, e + self.lo)
    }

    fn mul(self, b: f64) -> Dd {
        let p = self.hi * b;
        let e = self.hi.mul_add(b, -p);
        fast_two_sum(p, e + self.lo * b)
    }
}

impl Add for &ComplexPolynomial {
    type Output = ComplexPolynomial;

    fn add(self, rhs: Self) -> ComplexPolynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        ComplexPolynomial::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Neg for &ComplexPolynomial {
    type Output = ComplexPolynomial;

    fn neg(self) -> ComplexPolynomial {
        ComplexPolynomial::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

impl Sub for &ComplexPolynomial {
    type Output = ComplexPolynomial;

    fn sub(self, rhs: Self) -> ComplexPolynomial {
        self + &(-rhs)
    }
}

impl Mul for &ComplexPolynomial {
    type Output = ComplexPolynomial;

    fn mul(self, rhs: Self) -> ComplexPolynomial {
        if self.is_zero() || rhs.is_zero() {
            return ComplexPolynomial::zero();
        }
        let mut out = vec![Complex64::default(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        ComplexPolynomial::new(out)
    }
}

impl fmt::Display for ComplexPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != Complex64::default())
            .map(|(k, c)| match k {
                0 => format!("({c})"),
                1 => format!("({c}) m"),
                _ => format!("({c}) m^{k}"),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}
