//! Architectures, initializations and the mean-field variance recurrence.
//!
//! Every layer is reduced to the scalars consumed by the master equation:
//! the pre-activation variance `q`, the mass `c` of the squared activation
//! derivative, the cumulative width ratio `Λ = N₀/N_ℓ` and the weight gain
//! `σ²_W`.

use std::f64::consts::{FRAC_2_PI, PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const HARD_SINE_TERM_FLOOR: f64 = 1e-16;
const HARD_SINE_MAX_TERMS: usize = 200;
/// Below this variance the Fourier series needs more than
/// `HARD_SINE_MAX_TERMS` terms and the direct-space sum is used instead.
const HARD_SINE_SERIES_MIN_Q: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Nonlinearity {
    Linear,
    Relu,
    /// `clamp(h, -1, 1)`.
    HardTanh,
    /// Triangle wave `(2/π) arcsin(sin(πh/2))`.
    HardSine,
}

impl Nonlinearity {
    pub const ALL: [Nonlinearity; 4] = [
        Nonlinearity::Linear,
        Nonlinearity::Relu,
        Nonlinearity::HardTanh,
        Nonlinearity::HardSine,
    ];

    pub fn apply(self, h: f64) -> f64 {
        match self {
            Nonlinearity::Linear => h,
            Nonlinearity::Relu => h.max(0.0),
            Nonlinearity::HardTanh => h.clamp(-1.0, 1.0),
            Nonlinearity::HardSine => FRAC_2_PI * (0.5 * PI * h).sin().asin(),
        }
    }

    /// Derivative `φ'(h)`, taking the one-sided value 0 at the kinks of
    /// ReLU and Hard Tanh (a null set under Gaussian inputs).
    pub fn derivative(self, h: f64) -> f64 {
        match self {
            Nonlinearity::Linear => 1.0,
            Nonlinearity::Relu => {
                if h > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Nonlinearity::HardTanh => {
                if h.abs() < 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Nonlinearity::HardSine => {
                if (0.5 * PI * h).cos() >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }

    pub fn g_moment(self, q: f64) -> f64 {
        g_moment(self, q)
    }

    pub fn coefficient(self, q: f64) -> f64 {
        layer_coefficient(self, q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub nonlinearity: Nonlinearity,
    /// Weight variance gain `σ²_W`; entries of `W` have variance `σ²_W / N_ℓ`.
    pub sigma_w_sq: f64,
    #[serde(default)]
    pub sigma_b_sq: f64,
    /// Width ratio `N_{ℓ-1} / N_ℓ`.
    #[serde(default = "one")]
    pub lambda: f64,
}

fn one() -> f64 {
    1.0
}

impl LayerSpec {
    pub fn new(nonlinearity: Nonlinearity, sigma_w_sq: f64, sigma_b_sq: f64, lambda: f64) -> Self {
        Self {
            nonlinearity,
            sigma_w_sq,
            sigma_b_sq,
            lambda,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_w_sq.is_finite() && self.sigma_w_sq > 0.0) {
            return Err(Error::InvalidNetwork(format!(
                "sigma_w_sq must be positive and finite, got {}",
                self.sigma_w_sq
            )));
        }
        if !(self.sigma_b_sq.is_finite() && self.sigma_b_sq >= 0.0) {
            return Err(Error::InvalidNetwork(format!(
                "sigma_b_sq must be non-negative and finite, got {}",
                self.sigma_b_sq
            )));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::InvalidNetwork(format!(
                "lambda must be positive and finite, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub layers: Vec<LayerSpec>,
    /// Mean squared entry of the input vector, feeding `q¹`.
    #[serde(default = "one")]
    pub input_mean_square: f64,
}

impl NetworkSpec {
    pub fn new(layers: Vec<LayerSpec>, input_mean_square: f64) -> Result<Self> {
        let spec = Self {
            layers,
            input_mean_square,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `depth` identical layers without biases and unit input mean square.
    pub fn uniform(depth: usize, nonlinearity: Nonlinearity, sigma_w_sq: f64, lambda: f64) -> Result<Self> {
        Self::new(vec![LayerSpec::new(nonlinearity, sigma_w_sq, 0.0, lambda); depth], 1.0)
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::InvalidNetwork("at least one layer is required".into()));
        }
        if !(self.input_mean_square.is_finite() && self.input_mean_square > 0.0) {
            return Err(Error::InvalidNetwork(format!(
                "input_mean_square must be positive and finite, got {}",
                self.input_mean_square
            )));
        }
        for (i, layer) in self.layers.iter().enumerate() {
            layer
                .validate()
                .map_err(|e| Error::InvalidNetwork(format!("layer {}: {e}", i + 1)))?;
        }
        let ratios = self.cumulative_ratios();
        if let Some(bad) = ratios.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::InvalidNetwork(format!(
                "cumulative width ratio {bad} is not finite and positive"
            )));
        }
        Ok(())
    }

    /// `Λ_ℓ = λ_1 ⋯ λ_ℓ` for `ℓ = 1..=L` (the convention `Λ₀ = 1` is implicit).
    pub fn cumulative_ratios(&self) -> Vec<f64> {
        self.layers
            .iter()
            .scan(1.0, |acc, layer| {
                *acc *= layer.lambda;
                Some(*acc)
            })
            .collect()
    }
}

/// Per-layer data entering the master equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerSummary {
    pub q: f64,
    pub c: f64,
    /// Cumulative ratio `Λ_ℓ`.
    pub cumulative_ratio: f64,
    pub sigma_w_sq: f64,
    /// Local ratio `λ_ℓ`, so that `Λ_{ℓ-1} = Λ_ℓ / λ_ℓ`.
    pub lambda: f64,
}

/// Standard normal CDF.
pub(crate) fn normal_cdf(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 - 0.5 * libm::erfc(x / SQRT_2)
    } else {
        0.5 * libm::erfc(-x / SQRT_2)
    }
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `P(|N| ≤ 1/√q)`, the probability that a Hard Tanh unit is unsaturated.
fn hard_tanh_active_probability(q: f64) -> f64 {
    libm::erf(1.0 / (2.0 * q).sqrt())
}

/// `E[φ(√q N)²]` for a standard Gaussian `N`.
pub fn g_moment(nl: Nonlinearity, q: f64) -> f64 {
    debug_assert!(q > 0.0);
    match nl {
        Nonlinearity::Linear => q,
        Nonlinearity::Relu => 0.5 * q,
        Nonlinearity::HardTanh => {
            // q E[N²; |N| < a] + P(|N| > a), a = 1/√q
            let active = hard_tanh_active_probability(q);
            let saturated = libm::erfc(1.0 / (2.0 * q).sqrt());
            q * active - (2.0 * q / PI).sqrt() * (-0.5 / q).exp() + saturated
        }
        Nonlinearity::HardSine => {
            if q >= HARD_SINE_SERIES_MIN_Q {
                hard_sine_series(q)
            } else {
                hard_sine_direct(q)
            }
        }
    }
}

/// `1/3 + (4/π²) Σ (-1)ⁿ/n² exp(-q π² n² / 2)`, from the Fourier series of
/// the squared triangle wave.
fn hard_sine_series(q: f64) -> f64 {
    let prefactor = 4.0 / (PI * PI);
    let mut sum = 0.0;
    for n in 1..=HARD_SINE_MAX_TERMS {
        let nf = n as f64;
        let term = prefactor * (-0.5 * q * PI * PI * nf * nf).exp() / (nf * nf);
        if term < HARD_SINE_TERM_FLOOR {
            break;
        }
        if n % 2 == 1 {
            sum -= term;
        } else {
            sum += term;
        }
    }
    1.0 / 3.0 + sum
}

/// Sum over the linear pieces `φ(x) = ±(x - 2k)` on `[2k-1, 2k+1]`.
fn hard_sine_direct(q: f64) -> f64 {
    let s = q.sqrt();
    let mut total = 0.0;
    for k in 0i32.. {
        let k_f = k as f64;
        let a = (2.0 * k_f - 1.0) / s;
        let b = (2.0 * k_f + 1.0) / s;
        let prob = normal_cdf(b) - normal_cdf(a);
        let first = normal_pdf(a) - normal_pdf(b);
        let second = prob + a * normal_pdf(a) - b * normal_pdf(b);
        // E[(sN - 2k)²; a < N < b], mirrored for -k by symmetry.
        let piece = q * second - 4.0 * k_f * s * first + 4.0 * k_f * k_f * prob;
        total += if k == 0 { piece } else { 2.0 * piece };
        if k > 0 && prob < 1e-300 {
            break;
        }
    }
    total
}

/// Mass of the squared activation derivative `φ'(√q N)²` at 1.
///
/// ReLU gives 1/2, Linear and Hard Sine give 1; Hard Tanh gives the
/// probability `P(|N| ≤ 1/√q)` that the unit is not saturated.
pub fn layer_coefficient(nl: Nonlinearity, q: f64) -> f64 {
    match nl {
        Nonlinearity::Linear | Nonlinearity::HardSine => 1.0,
        Nonlinearity::Relu => 0.5,
        Nonlinearity::HardTanh => hard_tanh_active_probability(q),
    }
}

/// Mean-field recurrence `q¹ = σ²_W₁ r + σ²_b₁`,
/// `q^ℓ = σ²_W g(q^{ℓ-1}) + σ²_b`.
pub fn propagate_variances(spec: &NetworkSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let mut qs = Vec::with_capacity(spec.depth());
    let mut prev: Option<(Nonlinearity, f64)> = None;
    for (i, layer) in spec.layers.iter().enumerate() {
        let drive = match prev {
            None => spec.input_mean_square,
            Some((nl, q)) => g_moment(nl, q),
        };
        let q = layer.sigma_w_sq * drive + layer.sigma_b_sq;
        if !(q.is_finite() && q > 0.0) {
            return Err(Error::NonPositiveVariance { layer: i + 1, q });
        }
        qs.push(q);
        prev = Some((layer.nonlinearity, q));
    }
    Ok(qs)
}

pub fn summarize(spec: &NetworkSpec) -> Result<Vec<LayerSummary>> {
    let qs = propagate_variances(spec)?;
    let ratios = spec.cumulative_ratios();
    Ok(spec
        .layers
        .iter()
        .zip(qs)
        .zip(ratios)
        .map(|((layer, q), cumulative_ratio)| LayerSummary {
            q,
            c: layer_coefficient(layer.nonlinearity, q),
            cumulative_ratio,
            sigma_w_sq: layer.sigma_w_sq,
            lambda: layer.lambda,
        })
        .collect())
}

/// Mass of the atom at zero in the limiting law: one minus the rank
/// fraction `min(1, min_ℓ c_ℓ / Λ_ℓ)` of `JᵀJ`.
///
/// This equals `1 + M(0)`, where `M(0)` is the zero of `M⁻¹` closest to the
/// origin, namely `-1` or one of the `-c_ℓ/Λ_ℓ`.
pub fn atom_mass(layers: &[LayerSummary]) -> f64 {
    let rank = layers.iter().map(|l| l.c / l.cumulative_ratio).fold(1.0_f64, f64::min);
    (1.0 - rank).max(0.0)
}

/// Width-only lower bound `max(0, 1 - 1/max_ℓ Λ_ℓ)` on the atom at zero.
pub fn atom_lower_bound(layers: &[LayerSummary]) -> f64 {
    let max_ratio = layers.iter().map(|l| l.cumulative_ratio).fold(0.0_f64, f64::max);
    (1.0 - 1.0 / max_ratio).max(0.0)
}
