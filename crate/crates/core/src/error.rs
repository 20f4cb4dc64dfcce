use thiserror::Error;

/// Errors raised by the search loop, the analysis routines and the problem
/// definitions.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("solution {0} is not in the feasible set")]
    Infeasible(String),

    #[error("empty neighborhood at {0}")]
    EmptyNeighborhood(String),

    #[error("simulation sampler failed: {0}")]
    Sampler(String),

    #[error("neighborhood is not symmetric: R({from}, {to}) = {forward} but R({to}, {from}) = {backward}")]
    AsymmetricNeighborhood {
        from: String,
        to: String,
        forward: f64,
        backward: f64,
    },

    #[error("brute-force enumeration supports at most {max} tests, got {got}")]
    EnumerationBound { max: u32, got: u32 },

    #[error("conditional expectation undefined: acceptance is impossible when s = 1")]
    AcceptanceImpossible,

    #[error("power iteration did not converge after {iterations} doublings (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("optimal set is empty")]
    EmptyOptimalSet,

    #[error("problem has no known optimum set")]
    NoKnownOptimum,

    #[error("i/o failure: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
