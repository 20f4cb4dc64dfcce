//! The stochastic ruler search loop.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluate::evaluate_candidate;
use crate::problem::{Neighborhood, SimulationProblem};
use crate::rng::Streams;
use crate::ruler::{CoverageDiagnostic, RulerConfig};
use crate::schedule::{AcceptanceRule, TestSchedule};

/// Replicates drawn at the initial solution to estimate its objective, since
/// `x_0` is never evaluated as a candidate.
pub const WARMUP_REPLICATES: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TerminationPolicy {
    /// Stop when the current solution is a known global optimum.
    /// `max_iterations` is a safety cap.
    KnownOptimumHit { max_iterations: u64 },
    /// Stop when the estimated objective of the current solution has
    /// decreased by `fraction` relative to the initial solution's estimate;
    /// running out of `max_iterations` first counts as a failure.
    MinDecrease { fraction: f64, max_iterations: u64 },
    IterationBudget { max_iterations: u64 },
}

impl TerminationPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TerminationPolicy::MinDecrease { fraction, .. } if !(fraction > 0.0 && fraction < 1.0) => {
                Err(Error::InvalidConfig(format!(
                    "minimum decrease must lie in (0, 1), got {fraction}"
                )))
            }
            TerminationPolicy::IterationBudget { max_iterations: 0 }
            | TerminationPolicy::MinDecrease { max_iterations: 0, .. } => {
                Err(Error::InvalidConfig("iteration budget must be at least 1".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn max_iterations(&self) -> u64 {
        match *self {
            TerminationPolicy::KnownOptimumHit { max_iterations }
            | TerminationPolicy::MinDecrease { max_iterations, .. }
            | TerminationPolicy::IterationBudget { max_iterations } => max_iterations,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    OptimumHit,
    MinDecreaseMet,
    BudgetExhausted,
}

impl TerminationReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            TerminationReason::OptimumHit => "optimum_hit",
            TerminationReason::MinDecreaseMet => "min_decrease_met",
            TerminationReason::BudgetExhausted => "budget_exhausted",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "optimum_hit" => Some(TerminationReason::OptimumHit),
            "min_decrease_met" => Some(TerminationReason::MinDecreaseMet),
            "budget_exhausted" => Some(TerminationReason::BudgetExhausted),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub ruler: RulerConfig,
    pub schedule: TestSchedule,
    pub rule: AcceptanceRule,
    pub termination: TerminationPolicy,
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        self.rule.validate()?;
        self.termination.validate()
    }
}

/// One accepted state of the chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Visit<S> {
    /// Iterations completed when the state was entered (0 for `x_0`).
    pub iteration: u64,
    pub state: S,
    /// Mean of the observations from the evaluation that accepted the state;
    /// for `x_0`, the mean of the warm-up batch when one was drawn.
    pub estimate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord<S> {
    pub trajectory: Vec<Visit<S>>,
    /// Candidate evaluations performed (Step 2 invocations).
    pub iterations: u64,
    /// Ruler tests performed, i.e. simulation replicates spent on candidates.
    pub total_replicates: u64,
    /// Replicates spent estimating the initial solution.
    pub warmup_replicates: u64,
    /// Iterations where the proposal returned the current state; these run
    /// no tests.
    pub stay_proposals: u64,
    pub final_solution: S,
    pub final_estimate: Option<f64>,
    pub termination: TerminationReason,
    pub coverage: CoverageDiagnostic,
}

impl<S> RunRecord<S> {
    pub fn accepted_moves(&self) -> usize {
        self.trajectory.len().saturating_sub(1)
    }

    pub fn initial_estimate(&self) -> Option<f64> {
        self.trajectory.first().and_then(|v| v.estimate)
    }
}

fn mean_of_samples<P, R>(problem: &P, x: &P::Solution, count: u32, rng: &mut R) -> Result<f64>
where
    P: SimulationProblem + ?Sized,
    R: Rng + ?Sized,
{
    let mut sum = 0.0;
    for _ in 0..count {
        sum += problem.sample(x, rng)?;
    }
    Ok(sum / f64::from(count))
}

/// Runs the search from `x0` until `config.termination` fires.
///
/// Each iteration proposes `z_k` from `N(x_k)` (Step 1), tests it with
/// `M_k` ruler comparisons under the configured acceptance rule (Step 2), and
/// moves to `z_k` on acceptance (Step 3).
pub fn run<P, N>(
    problem: &P,
    neighborhood: &N,
    config: &SearchConfig,
    x0: P::Solution,
    streams: &mut Streams,
) -> Result<RunRecord<P::Solution>>
where
    P: SimulationProblem + ?Sized,
    N: Neighborhood<P::Solution> + ?Sized,
{
    config.validate()?;
    problem.check_feasible(&x0)?;

    let optima = match config.termination {
        TerminationPolicy::KnownOptimumHit { .. } => {
            Some(problem.known_optima().ok_or(Error::NoKnownOptimum)?)
        }
        _ => None,
    };
    let is_optimal = |x: &P::Solution| optima.as_ref().is_some_and(|o| o.contains(x));

    let mut warmup_replicates = 0;
    let mut target = None;
    let mut x0_estimate = None;
    if let TerminationPolicy::MinDecrease { fraction, .. } = config.termination {
        let est = mean_of_samples(problem, &x0, WARMUP_REPLICATES, &mut streams.simulation)?;
        warmup_replicates = u64::from(WARMUP_REPLICATES);
        target = Some(est - fraction * est.abs());
        x0_estimate = Some(est);
    }

    let mut record = RunRecord {
        trajectory: vec![Visit {
            iteration: 0,
            state: x0.clone(),
            estimate: x0_estimate,
        }],
        iterations: 0,
        total_replicates: 0,
        warmup_replicates,
        stay_proposals: 0,
        final_solution: x0.clone(),
        final_estimate: x0_estimate,
        termination: TerminationReason::BudgetExhausted,
        coverage: CoverageDiagnostic::default(),
    };
    if is_optimal(&x0) {
        record.termination = TerminationReason::OptimumHit;
        return Ok(record);
    }

    let max_iterations = config.termination.max_iterations();
    let mut x = x0;
    let mut k = 0u64;
    while k < max_iterations {
        let z = neighborhood.propose(&x, &mut streams.proposal)?;
        let allotted = config.schedule.tests_at(k);
        k += 1;
        if z == x {
            record.stay_proposals += 1;
            continue;
        }
        let outcome = evaluate_candidate(
            problem,
            &z,
            allotted,
            &config.rule,
            &config.ruler,
            &mut streams.simulation,
            &mut streams.ruler,
            Some(&mut record.coverage),
        )?;
        record.total_replicates += u64::from(outcome.tests_run);
        if !outcome.accepted {
            continue;
        }
        let estimate = outcome.mean_observation();
        x = z;
        record.trajectory.push(Visit {
            iteration: k,
            state: x.clone(),
            estimate,
        });
        record.final_estimate = estimate;
        if is_optimal(&x) {
            record.termination = TerminationReason::OptimumHit;
            break;
        }
        if let (Some(t), Some(e)) = (target, estimate) {
            if e <= t {
                record.termination = TerminationReason::MinDecreaseMet;
                break;
            }
        }
    }
    record.iterations = k;
    record.final_solution = x;
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::simple::{ConstantProblem, PairNeighborhood};
    use crate::problems::toy::{CompleteNeighborhood, ToyObjective};

    fn config(rule: AcceptanceRule, termination: TerminationPolicy) -> SearchConfig {
        SearchConfig {
            ruler: RulerConfig::new(-0.5, 1.9).unwrap(),
            schedule: TestSchedule::default(),
            rule,
            termination,
        }
    }

    #[test]
    fn single_state_space_stops_immediately() {
        let toy = ToyObjective::new(vec![0.4], RulerConfig::new(-0.5, 1.0).unwrap()).unwrap();
        let nbhd = CompleteNeighborhood::new(1);
        let cfg = config(
            AcceptanceRule::Original,
            TerminationPolicy::KnownOptimumHit { max_iterations: 100 },
        );
        let rec = run(&toy, &nbhd, &cfg, 1, &mut Streams::new(1)).unwrap();
        assert_eq!(rec.termination, TerminationReason::OptimumHit);
        assert_eq!((rec.iterations, rec.total_replicates), (0, 0));
    }

    #[test]
    fn example1_reaches_global_minimum() {
        let toy = ToyObjective::example1();
        let nbhd = CompleteNeighborhood::new(10);
        for rule in [AcceptanceRule::Original, AcceptanceRule::Relaxed { alpha: 0.75 }] {
            let cfg = config(rule, TerminationPolicy::KnownOptimumHit { max_iterations: 10_000 });
            let rec = run(&toy, &nbhd, &cfg, 1, &mut Streams::new(42)).unwrap();
            assert_eq!(rec.termination, TerminationReason::OptimumHit);
            assert_eq!(rec.final_solution, 9);
            assert!(rec.iterations >= 1);
        }
    }

    #[test]
    fn infeasible_start_is_an_error() {
        let toy = ToyObjective::example1();
        let nbhd = CompleteNeighborhood::new(10);
        let cfg = config(
            AcceptanceRule::Original,
            TerminationPolicy::IterationBudget { max_iterations: 5 },
        );
        assert!(matches!(
            run(&toy, &nbhd, &cfg, 11, &mut Streams::new(1)),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn optimum_policy_needs_known_optimum() {
        let ruler = RulerConfig::new(0.0, 1.0).unwrap();
        let p = ConstantProblem::new(0.5, ruler);
        let cfg = config(
            AcceptanceRule::Original,
            TerminationPolicy::KnownOptimumHit { max_iterations: 5 },
        );
        assert_eq!(
            run(&p, &PairNeighborhood, &cfg, 0, &mut Streams::new(1)).unwrap_err(),
            Error::NoKnownOptimum
        );
    }

    #[test]
    fn budget_exhaustion_is_a_normal_outcome() {
        // h = 2 never passes a ruler on [0, 1]
        let ruler = RulerConfig::new(0.0, 1.0).unwrap();
        let p = ConstantProblem::new(2.0, ruler);
        let mut cfg = config(
            AcceptanceRule::Original,
            TerminationPolicy::MinDecrease { fraction: 0.1, max_iterations: 25 },
        );
        cfg.ruler = ruler;
        let rec = run(&p, &PairNeighborhood, &cfg, 0, &mut Streams::new(3)).unwrap();
        assert_eq!(rec.termination, TerminationReason::BudgetExhausted);
        assert_eq!(rec.iterations, 25);
        // every candidate is rejected after one failed test
        assert_eq!(rec.total_replicates, 25);
        assert_eq!(rec.warmup_replicates, u64::from(WARMUP_REPLICATES));
        assert_eq!(rec.final_solution, 0);
        assert_eq!(rec.coverage.above, 25);
    }

    #[test]
    fn identical_seeds_give_identical_records() {
        let toy = ToyObjective::example1();
        let nbhd = CompleteNeighborhood::new(10);
        let cfg = config(
            AcceptanceRule::Relaxed { alpha: 0.6 },
            TerminationPolicy::IterationBudget { max_iterations: 300 },
        );
        let a = run(&toy, &nbhd, &cfg, 3, &mut Streams::new(99)).unwrap();
        let b = run(&toy, &nbhd, &cfg, 3, &mut Streams::new(99)).unwrap();
        assert_eq!(a, b);
        let c = run(&toy, &nbhd, &cfg, 3, &mut Streams::new(100)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn record_serializes_to_stable_json() {
        let toy = ToyObjective::example1();
        let nbhd = CompleteNeighborhood::new(10);
        let cfg = config(
            AcceptanceRule::Original,
            TerminationPolicy::KnownOptimumHit { max_iterations: 1000 },
        );
        let rec = run(&toy, &nbhd, &cfg, 2, &mut Streams::new(5)).unwrap();
        let json = serde_json::to_value(&rec).unwrap();
        for key in [
            "trajectory",
            "iterations",
            "total_replicates",
            "warmup_replicates",
            "stay_proposals",
            "final_solution",
            "final_estimate",
            "termination",
            "coverage",
        ] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        assert_eq!(json["termination"], "optimum_hit");
        let back: RunRecord<u32> = serde_json::from_value(json).unwrap();
        assert_eq!(back, rec);
    }
}
