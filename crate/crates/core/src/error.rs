use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("pole of the Gamma function at {0}")]
    Pole(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not reach tolerance: estimated error {estimate:.3e} > {tol:.3e}")]
    Quadrature { estimate: f64, tol: f64 },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("flux extrapolation unstable at x = {x}: estimates {a:.6e} vs {b:.6e}")]
    Extrapolation { x: f64, a: f64, b: f64 },

    #[error("linear solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("operator is not coercive: {0}")]
    Coercivity(String),

    #[error("iteration diverged: {0}")]
    Divergence(String),

    #[error("zero denominator: {0}")]
    ZeroDenominator(String),

    #[error("fit quality too low: R^2 = {r2:.5}")]
    FitQuality { r2: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
