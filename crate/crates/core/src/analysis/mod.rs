//! Exact analysis of the search chain: win probabilities, acceptance
//! probabilities, transition matrices and stationary distributions.

pub mod acceptance;
pub mod chain;
pub mod export;
pub mod stationary;
pub mod win;

pub use acceptance::{
    acceptance_probability, brute_force_acceptance, expected_tests_given_accept, relaxed_acceptance,
};
pub use chain::{transition_matrix, TransitionMatrix};
pub use stationary::{
    limit_vector, order_reversal_violations, stationary_eig, stationary_formula, OptimalSet,
    StationarySource, StationaryVector,
};
pub use win::{win_probability, DistributionSpec, WinMethod, WinProbability};
