use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("non-positive pre-activation variance q = {q} at layer {layer}")]
    NonPositiveVariance { layer: usize, q: f64 },

    #[error("master equation coefficient overflow (magnitude {magnitude:e})")]
    CoefficientOverflow { magnitude: f64 },

    #[error("invalid rational function: {0}")]
    InvalidRational(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("target z = {z} must lie in the upper half-plane")]
    NotUpperHalfPlane { z: Complex64 },

    #[error(
        "Newton-Raphson did not reach the tolerance after {iterations} iterations (m = {m}, |phi| = {residual:e})"
    )]
    NewtonMaxIterations {
        iterations: usize,
        m: Complex64,
        residual: f64,
    },

    #[error("Newton-Raphson derivative vanished at m = {m}")]
    DerivativeUnderflow { m: Complex64 },

    #[error("no certified start found after {doublings} doublings of Im z (last z = {z})")]
    DoublingCapExceeded { doublings: usize, z: Complex64 },

    #[error("dichotomy stalled between z = {z} (m = {m}) and the target {target}")]
    DichotomyStalled {
        z: Complex64,
        m: Complex64,
        target: Complex64,
    },

    #[error("solver failed at x = {x}: {source}")]
    GridPoint {
        x: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid window misses the bulk (continuous mass {mass:.4} of expected {expected:.4})")]
    WindowMissesBulk { mass: f64, expected: f64 },

    #[error("invalid probability {0}: quantile levels must lie strictly inside (0, 1)")]
    InvalidProbability(f64),

    #[error("root finder did not converge after {iterations} iterations")]
    RootsNotConverged { iterations: usize },

    #[error("Monte-Carlo sampling: {0}")]
    MonteCarlo(String),
}
