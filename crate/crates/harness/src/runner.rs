//! Runs the replications of an experiment.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use stochastic_ruler::format::{fmt_sig, parse_sig};
use stochastic_ruler::problem::{Neighborhood, SimulationProblem};
use stochastic_ruler::problems::calibrator::CalibratorProblem;
use stochastic_ruler::problems::facility::FacilityProblem;
use stochastic_ruler::problems::toy::{CompleteNeighborhood, RingNeighborhood, ToyObjective};
use stochastic_ruler::rng::{replication_seed, stream, Purpose, StreamRng, Streams};
use stochastic_ruler::search::{run, SearchConfig, TerminationReason};

use crate::config::{Cell, ExperimentConfig, ProblemId};

/// One replication, as written to the per-replication CSV. Reals are already
/// rounded to the CSV precision, so aggregates computed from these rows
/// match aggregates recomputed from the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub problem: String,
    pub variant: String,
    pub alpha: Option<f64>,
    pub min_decrease: Option<f64>,
    pub replication: u32,
    pub seed: u64,
    pub iterations: u64,
    pub replicates: u64,
    pub warmup_replicates: u64,
    pub stay_proposals: u64,
    pub accepted_moves: u64,
    pub terminated_reason: String,
    pub success: bool,
    pub initial_solution: String,
    pub initial_objective: Option<f64>,
    pub final_solution: String,
    pub final_objective: Option<f64>,
    pub exact_objective: Option<f64>,
}

impl RunRow {
    pub fn is_relaxed(&self) -> bool {
        self.variant == "relaxed"
    }
}

/// Rounds to the precision used in CSV output.
pub fn round_sig(v: f64) -> f64 {
    parse_sig(&fmt_sig(v)).unwrap_or(v)
}

fn run_cell<P, N>(
    problem: &P,
    neighborhood: &N,
    initial: &(dyn Fn(&mut StreamRng) -> P::Solution + Sync),
    cfg: &ExperimentConfig,
    cell: &Cell,
) -> anyhow::Result<Vec<RunRow>>
where
    P: SimulationProblem,
    N: Neighborhood<P::Solution> + Sync,
{
    let search = SearchConfig {
        ruler: problem.default_ruler(),
        schedule: cfg.schedule,
        rule: cell.rule,
        termination: cfg.termination(cell),
    };
    search.validate()?;
    (0..cfg.replications)
        .into_par_iter()
        .map(|rep| {
            let seed = replication_seed(cfg.seed, u64::from(rep));
            let x0 = initial(&mut stream(seed, Purpose::Initial));
            let mut streams = Streams::new(seed);
            let record = run(problem, neighborhood, &search, x0.clone(), &mut streams)?;
            Ok(RunRow {
                problem: cfg.problem.to_string(),
                variant: cell.rule.name().to_string(),
                alpha: cell.rule.alpha(),
                min_decrease: cell.min_decrease,
                replication: rep,
                seed,
                iterations: record.iterations,
                replicates: record.total_replicates,
                warmup_replicates: record.warmup_replicates,
                stay_proposals: record.stay_proposals,
                accepted_moves: record.accepted_moves() as u64,
                terminated_reason: record.termination.as_str().to_string(),
                success: record.termination != TerminationReason::BudgetExhausted,
                initial_solution: x0.to_string(),
                initial_objective: record.initial_estimate().map(round_sig),
                final_solution: record.final_solution.to_string(),
                final_objective: record.final_estimate.map(round_sig),
                exact_objective: problem.exact_mean(&record.final_solution).map(round_sig),
            })
        })
        .collect()
}

fn run_all_cells<P, N>(
    problem: &P,
    neighborhood: &N,
    initial: &(dyn Fn(&mut StreamRng) -> P::Solution + Sync),
    cfg: &ExperimentConfig,
) -> anyhow::Result<Vec<RunRow>>
where
    P: SimulationProblem,
    N: Neighborhood<P::Solution> + Sync,
{
    let mut rows = Vec::new();
    for cell in cfg.cells() {
        rows.extend(run_cell(problem, neighborhood, initial, cfg, &cell)?);
    }
    Ok(rows)
}

fn uniform_state(size: u32) -> impl Fn(&mut StreamRng) -> u32 + Sync {
    move |rng| rng.random_range(1..=size)
}

/// Runs every cell of `cfg`. Rows come back ordered by cell, then by
/// replication, independently of thread scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> anyhow::Result<Vec<RunRow>> {
    cfg.validate()?;
    match cfg.problem {
        ProblemId::Example1 => {
            let p = ToyObjective::example1();
            run_all_cells(&p, &CompleteNeighborhood::new(10), &uniform_state(10), cfg)
        }
        ProblemId::Example2 => {
            let p = ToyObjective::example2();
            run_all_cells(&p, &RingNeighborhood::example2(), &uniform_state(100), cfg)
        }
        ProblemId::Calibrator => {
            let p = CalibratorProblem::default();
            let x0 = p.config().initial_solution();
            run_all_cells(&p, &p.neighborhood(), &move |_: &mut StreamRng| x0.clone(), cfg)
        }
        ProblemId::Facility => {
            let p = FacilityProblem::default();
            let x0 = p.config().initial_solution();
            run_all_cells(&p, &p.neighborhood(), &move |_: &mut StreamRng| x0.clone(), cfg)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(problem: ProblemId) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::defaults(problem);
        cfg.replications = 6;
        if !cfg.min_decrease.is_empty() {
            cfg.min_decrease.truncate(1);
        }
        cfg
    }

    #[test]
    fn rows_are_ordered_and_deterministic() {
        let cfg = small(ProblemId::Example1);
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 12);
        assert!(a[..6].iter().all(|r| r.variant == "original"));
        assert!(a.iter().take(6).enumerate().all(|(i, r)| r.replication == i as u32));
        assert!(a.iter().all(|r| r.success && r.final_solution == "9"));
    }

    #[test]
    fn variants_share_replication_seeds() {
        let rows = run_experiment(&small(ProblemId::Example1)).unwrap();
        for i in 0..6 {
            assert_eq!(rows[i].seed, rows[i + 6].seed);
            assert_eq!(rows[i].initial_solution, rows[i + 6].initial_solution);
        }
    }

    #[test]
    fn min_decrease_problems_run() {
        for p in [ProblemId::Calibrator, ProblemId::Facility] {
            let rows = run_experiment(&small(p)).unwrap();
            assert_eq!(rows.len(), 12);
            assert!(rows.iter().all(|r| r.min_decrease.is_some() && r.initial_objective.is_some()));
        }
    }

    #[test]
    fn rounding_is_idempotent() {
        for v in [462.61234, 1.0 / 3.0, 11705.123] {
            assert_eq!(round_sig(round_sig(v)), round_sig(v));
        }
    }
}
