//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("measure is not normalized: total mass {mass}")]
    NonNormalized { mass: f64 },

    #[error("measure has support on the negative half-line: position {position}")]
    NegativeSupport { position: f64 },

    #[error("density is negative at x = {position}: {value}")]
    NegativeDensity { position: f64, value: f64 },

    #[error("density quadrature did not stabilize under node doubling: mass {coarse} vs {fine}")]
    NonIntegrable { coarse: f64, fine: f64 },

    #[error("argument out of domain: {what}")]
    Domain { what: String },

    #[error("argument {value} outside the S-transform window ({lo}, {hi})")]
    OutOfWindow { value: f64, lo: f64, hi: f64 },

    #[error("value {value} outside the S-transform range (lower endpoint {lo})")]
    OutOfRange { value: f64, lo: f64 },

    #[error("root finder did not converge: {what}")]
    NoConvergence { what: String },

    #[error("operation requires a non-Dirac measure")]
    DiracMeasure,

    #[error("radius {r} falls in the regime where this quantity is undefined ({what})")]
    Regime { r: f64, what: String },

    #[error("eigenvalue solver failed: {0}")]
    EigenFailure(String),

    #[error("invalid input: {0}")]
    Input(String),
}

impl Error {
    fn domain(what: impl Into<String>) -> Self {
        Error::Domain { what: what.into() }
    }

    pub fn require_positive(name: &str, value: f64) -> std::result::Result<(), Error> {
        if value > 0.0 && value.is_finite() {
            Ok(())
        } else {
            Err(Error::domain(format!("{name} must be positive, got {value}")))
        }
    }

    /// Stable machine-readable code for the CLI error JSON.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NonNormalized { .. } => "non_normalized",
            Error::NegativeSupport { .. } => "negative_support",
            Error::NegativeDensity { .. } => "negative_density",
            Error::NonIntegrable { .. } => "non_integrable",
            Error::Domain { .. } => "domain_error",
            Error::OutOfWindow { .. } => "out_of_window",
            Error::OutOfRange { .. } => "out_of_range",
            Error::NoConvergence { .. } => "no_convergence",
            Error::DiracMeasure => "dirac_measure",
            Error::Regime { .. } => "regime_error",
            Error::EigenFailure(_) => "eigen_failure",
            Error::Input(_) => "input_error",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
