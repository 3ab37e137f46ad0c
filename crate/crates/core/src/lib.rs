//! Spreading speeds for KPP-type bulk-surface reaction-diffusion systems in
//! unbounded cylinders, and shape optimization of the cross-section.
//!
//! The cross-section is a star-shaped planar domain with a Fourier-parametrized
//! boundary. A scalar field lives in the bulk, a second scalar lives on the
//! boundary curve, and the two exchange mass through a Robin-type coupling.
//! The asymptotic invasion speed along the cylinder axis is
//! `c* = min_{alpha > 0} -lambda(alpha) / alpha`, where `lambda(alpha)` is the
//! principal eigenvalue of a coupled cross-sectional operator pencil.
//!
//! Module map:
//! - [`geometry`]: Fourier boundary shapes, exact boundary geometry, meshing.
//! - [`coeffs`]: coefficient expressions and problem parameters.
//! - [`assembly`]: P1 finite-element forms for the coupled pencil.
//! - [`sparse`]: symmetric sparse storage, reordering, skyline factorization.
//! - [`eigsolver`]: principal eigenpair of the assembled pencil.
//! - [`speed`]: the speed functional, its minimizer in alpha, parameter sweeps.
//! - [`oracles`]: independent 1-D reductions and closed forms for validation.
//! - [`shape_grad`]: boundary shape derivative of the speed.
//! - [`optimizer`]: projected gradient ascent/descent over Fourier shapes.
//! - [`config`]: run configuration files and shape files.

pub mod assembly;
pub mod coeffs;
pub mod config;
pub mod eigsolver;
pub mod geometry;
pub mod optimizer;
pub mod oracles;
pub mod shape_grad;
pub mod sparse;
pub mod speed;

use thiserror::Error;

/// Unified error type for the whole crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Expression text failed to parse; `offset` is a byte offset into the source.
    #[error("parse error at byte {offset}: {msg}")]
    Parse { offset: usize, msg: String },
    /// Expression evaluation hit a domain fault (division by zero, sqrt of a
    /// negative value); `expr` is the offending subexpression.
    #[error("evaluation error in `{expr}`: {msg}")]
    Eval { expr: String, msg: String },
    /// Parameter values violate their constraints.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    /// A Fourier shape is degenerate (radius too small or nonpositive).
    #[error("invalid shape: min rho = {min_rho:.3e}, required > {required:.3e}")]
    InvalidShape { min_rho: f64, required: f64 },
    /// The mesher produced an unusable triangulation.
    #[error("mesh quality failure: {0}")]
    MeshQuality(String),
    /// Sparse factorization broke down (matrix numerically singular).
    #[error("factorization failure: {0}")]
    Factorization(String),
    /// The eigenvalue iteration did not converge within its iteration budget.
    #[error("eigensolver did not converge: {0}")]
    NonConvergence(String),
    /// The computed eigenvector is not positive, so it cannot be the
    /// principal one.
    #[error("eigenvector positivity violated: {0}")]
    Positivity(String),
    /// Bracketing the speed minimizer failed.
    #[error("speed minimization failure: {0}")]
    Bracket(String),
    /// A requested operation does not support the given configuration.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    /// Configuration file problems.
    #[error("config error: {0}")]
    Config(String),
    /// File I/O, wrapped with the path.
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Short stable identifier used in CSV status columns and exit reporting.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Eval { .. } => "eval",
            Error::InvalidParams(_) => "invalid_params",
            Error::InvalidShape { .. } => "invalid_shape",
            Error::MeshQuality(_) => "mesh_quality",
            Error::Factorization(_) => "factorization",
            Error::NonConvergence(_) => "non_convergence",
            Error::Positivity(_) => "positivity",
            Error::Bracket(_) => "bracket",
            Error::Unsupported(_) => "unsupported",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
        }
    }
}
