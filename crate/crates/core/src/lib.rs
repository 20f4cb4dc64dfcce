//! Stochastic ruler search for discrete simulation optimization.
//!
//! A candidate solution is accepted when its simulated observations beat
//! draws of a uniform "ruler" `theta(a, b)` often enough: every one of `M_k`
//! tests under the original rule, or `ceil(alpha M_k)` of them under the
//! relaxed rule. [`search::run`] drives the search; [`analysis`] holds the
//! exact Markov-chain tools used to check it; [`problems`] has the
//! benchmark problems.

pub mod analysis;
pub mod error;
pub mod evaluate;
pub mod format;
pub mod problem;
pub mod problems;
pub mod rng;
pub mod ruler;
pub mod schedule;
pub mod search;

pub use error::{Error, Result};
pub use evaluate::{evaluate_candidate, EvaluationOutcome};
pub use problem::{EnumerableNeighborhood, Neighborhood, SimulationProblem};
pub use rng::{replication_seed, Purpose, Streams};
pub use ruler::{CoverageDiagnostic, RulerConfig};
pub use schedule::{AcceptanceRule, TestSchedule};
pub use search::{run, RunRecord, SearchConfig, TerminationPolicy, TerminationReason};
