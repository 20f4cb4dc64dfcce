//! Step 2 of the search: testing one candidate against the ruler.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::SimulationProblem;
use crate::ruler::{CoverageDiagnostic, RulerConfig};
use crate::schedule::{success_threshold, AcceptanceRule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationOutcome {
    pub accepted: bool,
    /// `M_k`, the tests allotted.
    pub allotted: u32,
    /// Successes needed to accept.
    pub required: u32,
    pub tests_run: u32,
    pub successes: u32,
    /// Every `h` sampled during the evaluation, in order.
    pub observations: Vec<f64>,
}

impl EvaluationOutcome {
    pub fn failures(&self) -> u32 {
        self.tests_run - self.successes
    }

    /// Mean of the observations drawn while evaluating the candidate.
    pub fn mean_observation(&self) -> Option<f64> {
        if self.observations.is_empty() {
            None
        } else {
            Some(self.observations.iter().sum::<f64>() / self.observations.len() as f64)
        }
    }
}

/// Evaluates candidate `z` with `allotted` tests under `rule`.
///
/// Each test draws one replicate `h(z)` from `sim_rng` and one ruler value
/// `theta` from `ruler_rng`; the test succeeds when `h(z) <= theta`. The
/// evaluation stops as soon as either the success count reaches the
/// acceptance threshold `n` or the failure count reaches `allotted - n + 1`.
/// A test moves exactly one of the two counters, so they never reach their
/// thresholds together.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_candidate<P, R1, R2>(
    problem: &P,
    z: &P::Solution,
    allotted: u32,
    rule: &AcceptanceRule,
    ruler: &RulerConfig,
    sim_rng: &mut R1,
    ruler_rng: &mut R2,
    coverage: Option<&mut CoverageDiagnostic>,
) -> Result<EvaluationOutcome>
where
    P: SimulationProblem + ?Sized,
    R1: Rng + ?Sized,
    R2: Rng + ?Sized,
{
    if allotted == 0 {
        return Err(Error::InvalidConfig("at least one test must be allotted".into()));
    }
    rule.validate()?;
    let required = rule.required_successes(allotted);
    let failure_limit = allotted - required + 1;
    let mut out = EvaluationOutcome {
        accepted: false,
        allotted,
        required,
        tests_run: 0,
        successes: 0,
        observations: Vec::with_capacity(allotted as usize),
    };
    let mut coverage = coverage;
    let mut failures = 0;
    while out.tests_run < allotted {
        let h = problem.sample(z, sim_rng)?;
        let theta = ruler.sample(ruler_rng);
        if let Some(c) = coverage.as_deref_mut() {
            c.record(ruler, h);
        }
        out.observations.push(h);
        out.tests_run += 1;
        if h <= theta {
            out.successes += 1;
            if out.successes == required {
                out.accepted = true;
                break;
            }
        } else {
            failures += 1;
            if failures == failure_limit {
                break;
            }
        }
    }
    Ok(out)
}

/// Original rule: accept only if all `allotted` tests succeed.
pub fn evaluate_candidate_original<P, R1, R2>(
    problem: &P,
    z: &P::Solution,
    allotted: u32,
    ruler: &RulerConfig,
    sim_rng: &mut R1,
    ruler_rng: &mut R2,
) -> Result<EvaluationOutcome>
where
    P: SimulationProblem + ?Sized,
    R1: Rng + ?Sized,
    R2: Rng + ?Sized,
{
    evaluate_candidate(
        problem,
        z,
        allotted,
        &AcceptanceRule::Original,
        ruler,
        sim_rng,
        ruler_rng,
        None,
    )
}

/// Relaxed rule: accept once `ceil(alpha * allotted)` tests succeed.
pub fn evaluate_candidate_relaxed<P, R1, R2>(
    problem: &P,
    z: &P::Solution,
    allotted: u32,
    alpha: f64,
    ruler: &RulerConfig,
    sim_rng: &mut R1,
    ruler_rng: &mut R2,
) -> Result<EvaluationOutcome>
where
    P: SimulationProblem + ?Sized,
    R1: Rng + ?Sized,
    R2: Rng + ?Sized,
{
    let rule = AcceptanceRule::relaxed(alpha)?;
    debug_assert_eq!(rule.required_successes(allotted), success_threshold(alpha, allotted));
    evaluate_candidate(problem, z, allotted, &rule, ruler, sim_rng, ruler_rng, None)
}
