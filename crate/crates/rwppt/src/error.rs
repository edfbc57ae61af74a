//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain an operation is defined on
    /// (e.g. evaluating a tabulated density outside its grid).
    #[error("domain error: {0}")]
    Domain(String),

    /// A caller-supplied argument violates an operation's contract.
    #[error("argument error: {0}")]
    Argument(String),

    /// Model construction or validation failed.
    #[error("invalid model: {0}")]
    Model(String),

    /// Adaptive quadrature exhausted its panel budget before reaching the
    /// requested tolerance. Carries the achieved error estimate.
    #[error("quadrature did not converge: achieved error {achieved:.3e} > tolerance {tolerance:.3e} after {panels} panels")]
    QuadratureNonConvergence {
        achieved: f64,
        tolerance: f64,
        panels: usize,
    },

    /// The efficiency curve was still increasing at the end of the search
    /// interval, or the optimum degenerated.
    #[error("optimizer configuration error: {0}")]
    OptimizerConfig(String),

    /// A model does not satisfy the hypotheses a construction requires
    /// (e.g. non-constant tempering invariant for a geometric schedule).
    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    /// Internal chain state violated an invariant that valid states cannot
    /// (e.g. a ladder state outside every region).
    #[error("state corruption: {0}")]
    StateCorruption(String),

    /// Experiment configuration file is missing, malformed, or inconsistent.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
