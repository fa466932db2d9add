use thiserror::Error;

/// Errors raised by geometry, kernel, target and update-rule operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("point is not on the unit sphere (norm {norm})")]
    NotUnit { norm: f64 },

    #[error("point lies outside the chart domain: {0}")]
    OutsideChart(String),

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("metric is numerically singular (condition estimate {condition:e})")]
    Singular { condition: f64 },

    #[error("embedding providers inconsistent at particle {index}: {reason}")]
    InvalidProvider { index: usize, reason: String },

    #[error("optimizer {optimizer} cannot be used on manifold {manifold}")]
    IncompatibleOptimizer { optimizer: &'static str, manifold: String },

    #[error("not enough samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("at iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        Error::AtIteration {
            iteration,
            source: Box::new(self),
        }
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
