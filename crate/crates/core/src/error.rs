use std::io;

use thiserror::Error;

/// Errors raised anywhere in the pricing stack.
#[derive(Debug, Error)]
pub enum OrbitError {
    /// A parameter or configuration value violates its precondition.
    #[error("configuration error: {0}")]
    Config(String),

    /// A caller broke a documented contract (wrong dimension, out-of-range input).
    #[error("contract violation: {0}")]
    Contract(String),

    /// An interactive protocol was driven out of order.
    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("pilot-input budget of {budget} calls exhausted")]
    Budget { budget: u64 },

    #[error("invalid tail function: {0}")]
    InvalidTail(String),

    /// A numerical routine hit a state it cannot recover from (non-PD matrix, NaN).
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("no samples inside the local window around the query point")]
    NoData,

    /// A constructed object failed one of its structural checks.
    #[error("structural check failed: {0}")]
    Structure(String),

    #[error("refinement generator failed in bin {bin}: {source}")]
    Generator {
        bin: usize,
        #[source]
        source: Box<OrbitError>,
    },

    #[error("repetition {repetition}, round {round}: {source}")]
    Run {
        repetition: usize,
        round: u64,
        #[source]
        source: Box<OrbitError>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl OrbitError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        OrbitError::Config(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        OrbitError::Contract(msg.into())
    }

    /// Strips location wrappers and returns the underlying error.
    pub fn root(&self) -> &OrbitError {
        match self {
            OrbitError::Generator { source, .. } | OrbitError::Run { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for errors that stem from bad user input rather than numerics.
    pub fn is_configuration(&self) -> bool {
        matches!(self.root(), OrbitError::Config(_))
    }
}

pub type Result<T> = std::result::Result<T, OrbitError>;
