//! Simulated chains against the exact transition matrix.

use stochastic_ruler::analysis::chain::transition_matrix;
use stochastic_ruler::analysis::win::win_probability;
use stochastic_ruler::problems::toy::{CompleteNeighborhood, ToyObjective};
use stochastic_ruler::ruler::RulerConfig;
use stochastic_ruler::schedule::{AcceptanceRule, TestSchedule};
use stochastic_ruler::search::{run, SearchConfig, TerminationPolicy, TerminationReason};
use stochastic_ruler::{RunRecord, SimulationProblem, Streams};

const STEPS: u64 = 100_000;

fn two_state() -> ToyObjective {
    ToyObjective::new(vec![0.3, 0.9], RulerConfig::new(-0.5, 1.9).unwrap()).unwrap()
}

fn simulate(problem: &ToyObjective, m: u32, rule: AcceptanceRule, seed: u64) -> RunRecord<u32> {
    let cfg = SearchConfig {
        ruler: problem.default_ruler(),
        schedule: TestSchedule::Constant { m },
        rule,
        termination: TerminationPolicy::IterationBudget { max_iterations: STEPS },
    };
    let nbhd = CompleteNeighborhood::new(problem.len() as u32);
    run(problem, &nbhd, &cfg, 1, &mut Streams::new(seed)).unwrap()
}

/// Per-row (visits, moves to each other state) counted from the trajectory.
fn one_step_counts(record: &RunRecord<u32>, states: usize) -> Vec<(u64, Vec<u64>)> {
    let mut counts = vec![(0u64, vec![0u64; states]); states];
    let mut visits = record.trajectory.iter().peekable();
    let mut current = visits.next().unwrap().state;
    for k in 0..record.iterations {
        let row = &mut counts[current as usize - 1];
        row.0 += 1;
        if let Some(next) = visits.peek() {
            if next.iteration == k + 1 {
                row.1[next.state as usize - 1] += 1;
                current = next.state;
                visits.next();
            }
        }
    }
    counts
}

fn check_against_matrix(m: u32, rule: AcceptanceRule, seed: u64) {
    let problem = two_state();
    let win: Vec<f64> = problem
        .states()
        .map(|x| win_probability(&problem.distribution(x).unwrap(), &problem.default_ruler()).unwrap().value)
        .collect();
    let states: Vec<u32> = problem.states().collect();
    let t = transition_matrix(&states, &win, &CompleteNeighborhood::new(2), m, &rule).unwrap();
    let record = simulate(&problem, m, rule, seed);
    assert_eq!(record.iterations, STEPS);
    for (i, (visits, moves)) in one_step_counts(&record, 2).iter().enumerate() {
        let j = 1 - i;
        let p = t.get(i, j);
        let freq = moves[j] as f64 / *visits as f64;
        let se = (p * (1.0 - p) / *visits as f64).sqrt();
        assert!((freq - p).abs() <= 3.0 * se, "{rule:?} M={m} row {i}: {freq} vs {p} (se {se})");
    }
}

#[test]
fn original_rule_frequencies_match_matrix() {
    check_against_matrix(3, AcceptanceRule::Original, 11);
}

#[test]
fn relaxed_rule_frequencies_match_matrix() {
    check_against_matrix(5, AcceptanceRule::Relaxed { alpha: 0.6 }, 12);
    check_against_matrix(2, AcceptanceRule::Relaxed { alpha: 0.5 }, 13);
}

#[test]
fn single_state_stops_immediately() {
    let problem = ToyObjective::new(vec![0.4], RulerConfig::new(-0.5, 1.9).unwrap()).unwrap();
    let cfg = SearchConfig {
        ruler: problem.default_ruler(),
        schedule: TestSchedule::default(),
        rule: AcceptanceRule::Original,
        termination: TerminationPolicy::KnownOptimumHit { max_iterations: 100 },
    };
    let record = run(&problem, &CompleteNeighborhood::new(1), &cfg, 1, &mut Streams::new(3)).unwrap();
    assert_eq!(record.termination, TerminationReason::OptimumHit);
    assert_eq!((record.iterations, record.final_solution), (0, 1));
}

#[test]
fn example1_reaches_optimum() {
    let problem = ToyObjective::example1();
    for rule in [AcceptanceRule::Original, AcceptanceRule::Relaxed { alpha: 0.75 }] {
        let cfg = SearchConfig {
            ruler: problem.default_ruler(),
            schedule: TestSchedule::default(),
            rule,
            termination: TerminationPolicy::KnownOptimumHit { max_iterations: 10_000 },
        };
        for seed in 0..50 {
            let record = run(&problem, &CompleteNeighborhood::new(10), &cfg, 1, &mut Streams::new(seed)).unwrap();
            assert_eq!(record.termination, TerminationReason::OptimumHit);
            assert_eq!(record.final_solution, 9);
            assert!(record.trajectory.windows(2).all(|w| w[0].iteration < w[1].iteration));
        }
    }
}
