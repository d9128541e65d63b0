use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation (negative
    /// concentration, probability outside [0, 1], ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The channel scenario is inconsistent or degenerate.
    #[error("invalid scenario: {0}")]
    Scenario(String),

    /// The binning matrix cannot be inverted (the two ligands have the same
    /// unbinding rate and are indistinguishable by bound time).
    #[error("singular binning matrix (|det| = {det:e}); ligands are indistinguishable by bound time")]
    Singular { det: f64 },

    /// The receiver never observed an unbound interval.
    #[error("receiver saturated: total unbound time is {0}")]
    Saturation(f64),

    /// A series, root or integration failed to converge.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// No steady state was reached before the integration horizon.
    #[error("no steady state within t_end = {t_end} (residual {residual:e})")]
    Timeout { t_end: f64, residual: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn scenario(msg: impl Into<String>) -> Self {
        Error::Scenario(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for failures caused by user input rather than numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Scenario(_) | Error::Domain(_) | Error::Io(_)
        )
    }
}

/// Checks that `x` is finite and nonnegative.
pub(crate) fn nonneg(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() && x >= 0.0 {
        Ok(x)
    } else {
        Err(Error::domain(format!("{name} must be finite and >= 0, got {x}")))
    }
}

/// Checks that `x` is finite and strictly positive.
pub(crate) fn positive(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(Error::domain(format!("{name} must be finite and > 0, got {x}")))
    }
}
