//! Finite-width sampling of the Jacobian `J = D_L W_L ⋯ D_1 W_1`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::{propagate_variances, NetworkSpec};

/// How the activation derivatives `D_ℓ` are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplingMode {
    /// Independent diagonals `φ'(√q_ℓ N)`, leaving the limit unchanged.
    #[default]
    Swapped,
    /// Derivatives along an actual forward pass of a random input.
    ForwardPass,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalSpectrum {
    /// Eigenvalues of `JᵀJ`, ascending; those below the numerical-rank
    /// tolerance `N₀ ε λ_max` are set to zero.
    pub values: Vec<f64>,
    pub n0: usize,
    pub seed: u64,
    /// Fraction of exactly zero entries of each `D_ℓ`.
    pub zero_fractions: Vec<f64>,
}

impl EmpiricalSpectrum {
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Widths `N_ℓ = round(N₀/Λ_ℓ)`, starting with `N₀`.
pub fn layer_widths(spec: &NetworkSpec, n0: usize) -> Result<Vec<usize>> {
    if n0 < 4 {
        return Err(Error::MonteCarlo(format!("n0 must be at least 4, got {n0}")));
    }
    let mut widths = vec![n0];
    for (layer, ratio) in spec.cumulative_ratios().into_iter().enumerate() {
        let w = (n0 as f64 / ratio).round();
        if w < 1.0 {
            return Err(Error::MonteCarlo(format!(
                "width of layer {} rounds to zero",
                layer + 1
            )));
        }
        widths.push(w as usize);
    }
    Ok(widths)
}

// Stream identifiers keep every (layer, purpose) draw independent of the others.
const STREAM_WEIGHTS: u64 = 0;
const STREAM_DERIVATIVES: u64 = 1;
const STREAM_BIASES: u64 = 2;
const STREAM_INPUT: u64 = 3;

fn stream(seed: u64, layer: usize, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(4 * layer as u64 + purpose);
    rng
}

fn gaussian_vector(rng: &mut ChaCha8Rng, len: usize, std: f64) -> DVector<f64> {
    DVector::from_fn(len, |_, _| std * rng.sample::<f64, _>(StandardNormal))
}

pub fn monte_carlo_spectrum(spec: &NetworkSpec, n0: usize, seed: u64) -> Result<EmpiricalSpectrum> {
    monte_carlo_spectrum_with(spec, n0, seed, SamplingMode::Swapped)
}

/// Squared singular values of one sampled Jacobian. Weights have entries of
/// variance `σ²_ℓ/N_ℓ`; identical seeds give identical spectra.
pub fn monte_carlo_spectrum_with(
    spec: &NetworkSpec,
    n0: usize,
    seed: u64,
    mode: SamplingMode,
) -> Result<EmpiricalSpectrum> {
    spec.validate()?;
    let widths = layer_widths(spec, n0)?;
    let qs = propagate_variances(spec)?;

    let mut activation = match mode {
        SamplingMode::ForwardPass => Some(gaussian_vector(
            &mut stream(seed, 0, STREAM_INPUT),
            n0,
            spec.input_mean_square.sqrt(),
        )),
        SamplingMode::Swapped => None,
    };

    let mut jacobian: Option<DMatrix<f64>> = None;
    let mut zero_fractions = Vec::with_capacity(spec.depth());
    for (l, layer) in spec.layers.iter().enumerate() {
        let (rows, cols) = (widths[l + 1], widths[l]);
        let mut rng = stream(seed, l, STREAM_WEIGHTS);
        let std = (layer.sigma_w_sq / rows as f64).sqrt();
        let weights = DMatrix::from_fn(rows, cols, |_, _| std * rng.sample::<f64, _>(StandardNormal));

        let derivatives: Vec<f64> = match activation.as_mut() {
            None => {
                let mut rng = stream(seed, l, STREAM_DERIVATIVES);
                let scale = qs[l].sqrt();
                (0..rows)
                    .map(|_| {
                        layer
                            .nonlinearity
                            .derivative(scale * rng.sample::<f64, _>(StandardNormal))
                    })
                    .collect()
            }
            Some(x) => {
                let bias = gaussian_vector(&mut stream(seed, l, STREAM_BIASES), rows, layer.sigma_b_sq.sqrt());
                let pre = &weights * &*x + bias;
                let d = pre.iter().map(|&h| layer.nonlinearity.derivative(h)).collect();
                *x = pre.map(|h| layer.nonlinearity.apply(h));
                d
            }
        };
        zero_fractions.push(derivatives.iter().filter(|d| **d == 0.0).count() as f64 / rows as f64);

        let mut next = match jacobian {
            None => weights,
            Some(j) => weights * j,
        };
        for (mut row, d) in next.row_iter_mut().zip(&derivatives) {
            row *= *d;
        }
        jacobian = Some(next);
    }

    let j = jacobian.ok_or_else(|| Error::MonteCarlo("network has no layers".into()))?;
    // The non-zero spectrum of JᵀJ is that of the smaller Gram matrix.
    let gram = if j.nrows() < j.ncols() {
        &j * j.transpose()
    } else {
        j.transpose() * &j
    };
    let eig = SymmetricEigen::new(gram);
    // eigenvalues under the numerical-rank tolerance are roundoff images of zero
    let largest = eig.eigenvalues.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let floor = largest * n0 as f64 * f64::EPSILON;
    let mut values: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&v| if v <= floor { 0.0 } else { v })
        .collect();
    values.resize(n0, 0.0);
    values.sort_by(f64::total_cmp);

    Ok(EmpiricalSpectrum {
        values,
        n0,
        seed,
        zero_fractions,
    })
}
