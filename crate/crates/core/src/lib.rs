//! Spectral densities of squared singular values of the input-output
//! Jacobian of wide random feed-forward networks, computed at
//! initialization.
//!
//! The pipeline is:
//!
//! 1. [`network`]: propagate pre-activation variances through the layers and
//!    reduce every layer to the scalars `(q, c, Λ, σ²)`.
//! 2. [`transform`]: assemble the rational inverse moment series
//!    `M⁻¹(m) = P(m) / Q(m)` of `JᵀJ`, either directly or by chaining the
//!    per-layer S-transforms with the rectangular free multiplicative
//!    convolution.
//! 3. [`solver`]: invert `z = P(m)/Q(m)` on the physical branch with
//!    Kantorovich-certified Newton steps chained from `z = ∞` down to the
//!    target ("Newton lilypads").
//! 4. [`spectrum`]: Stieltjes inversion `ρ(x) = -Im G(x + iy) / π` over a grid,
//!    quantiles and moments.
//!
//! [`oracles`] holds the independent validators: Monte-Carlo sampling of
//! finite Jacobians, an all-roots polynomial solver, and the Kolmogorov-Smirnov
//! distance between the two.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod network;
pub mod oracles;
pub mod poly;
pub mod solver;
pub mod spectrum;
pub mod transform;

pub use error::{Error, Result};
pub use network::{
    g_moment, layer_coefficient, propagate_variances, summarize, LayerSpec, LayerSummary, NetworkSpec, Nonlinearity,
};
pub use num_complex::Complex64;
pub use poly::ComplexPolynomial;
pub use solver::{
    is_in_basin, newton_lilypads, newton_raphson, BasinCertificate, LilypadSolution, SolveStats, SolverConfig,
};
pub use spectrum::{closed_form_moments, density_grid, grid_moments, quantiles, DensityCurve, GridSpec, QuantileTable};
pub use transform::{
    eval_phi, master_from_summary, rect_convolve, second_derivative_bound, RationalMasterEq, RationalSTransform,
};
