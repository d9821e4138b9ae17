//! Independent checks on the free-probability pipeline.

pub mod ks;
pub mod monte_carlo;
pub mod roots;

pub use ks::{ks_distance, ks_distance_to_cdf};
pub use monte_carlo::{layer_widths, monte_carlo_spectrum, monte_carlo_spectrum_with, EmpiricalSpectrum, SamplingMode};
pub use roots::{all_roots, polynomial_roots, RootSet};
