//! Exact checks of the convergence theory on the benchmark problems.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;
use stochastic_ruler::analysis::acceptance::{
    acceptance_probability, brute_force_acceptance, expected_tests_given_accept, relaxed_acceptance,
};
use stochastic_ruler::analysis::chain::transition_matrix;
use stochastic_ruler::analysis::export::{write_matrix_csv, write_vectors_csv};
use stochastic_ruler::analysis::stationary::{
    limit_vector, order_reversal_violations, stationary_eig, stationary_formula, OptimalSet,
};
use stochastic_ruler::analysis::win::win_probability;
use stochastic_ruler::evaluate::evaluate_candidate;
use stochastic_ruler::problem::SimulationProblem;
use stochastic_ruler::problems::calibrator::CalibratorProblem;
use stochastic_ruler::problems::facility::FacilityProblem;
use stochastic_ruler::problems::laws::{check_enumerable, probe_calibrator, LawReport};
use stochastic_ruler::problems::simple::ConstantProblem;
use stochastic_ruler::problems::toy::{CompleteNeighborhood, RingNeighborhood, ToyObjective};
use stochastic_ruler::rng::{replication_seed, stream, Purpose};
use stochastic_ruler::ruler::RulerConfig;
use stochastic_ruler::schedule::{success_threshold, AcceptanceRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub status: Status,
    pub max_error: f64,
    pub tolerance: f64,
}

impl Check {
    /// Passes when `max_error <= tolerance`.
    pub fn within(max_error: f64, tolerance: f64) -> Check {
        let status = if max_error <= tolerance { Status::Pass } else { Status::Fail };
        Check { status, max_error, tolerance }
    }

    /// Passes when `max_error < tolerance`.
    pub fn strictly_below(max_error: f64, tolerance: f64) -> Check {
        let status = if max_error < tolerance { Status::Pass } else { Status::Fail };
        Check { status, max_error, tolerance }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

pub type Report = BTreeMap<String, Check>;

pub const STATIONARY_TOL: f64 = 1e-8;
pub const BRACKET_TOL: f64 = 1e-12;
pub const EMPIRICAL_REL_TOL: f64 = 0.02;
pub const LAW_TOL: f64 = 1e-12;

pub const EQUIVALENCE_MS: [u32; 5] = [1, 2, 5, 10, 20];
pub const LIMIT_M: u32 = 10_000;
pub const LIMIT_TOL: f64 = 1e-6;
pub const CONCENTRATION_MS: [u32; 7] = [1, 2, 5, 10, 20, 50, 100];

fn win_table(toy: &ToyObjective) -> anyhow::Result<Vec<f64>> {
    let ruler = toy.default_ruler();
    toy.states()
        .map(|x| Ok(win_probability(&toy.distribution(x)?, &ruler)?.value))
        .collect()
}

fn rule_tag(rule: &AcceptanceRule) -> String {
    match rule {
        AcceptanceRule::Original => "original".into(),
        AcceptanceRule::Relaxed { alpha } => format!("relaxed_{alpha}"),
    }
}

/// `max |formula - fixed point|` for example 1 with the complete
/// neighborhood.
pub fn example1_equivalence(ms: &[u32], rules: &[AcceptanceRule], out: Option<&Path>) -> anyhow::Result<f64> {
    let toy = ToyObjective::example1();
    let win = win_table(&toy)?;
    let states: Vec<u32> = toy.states().collect();
    let nbhd = CompleteNeighborhood::new(10);
    let opt = optimal_set(&toy, &win)?;
    let limit = limit_vector(&opt)?;
    let mut worst: f64 = 0.0;
    for rule in rules {
        for &m in ms {
            let t = transition_matrix(&states, &win, &nbhd, m, rule)?;
            let eig = stationary_eig(&t)?;
            let formula = stationary_formula(&win, m, rule)?;
            worst = worst.max(eig.max_abs_diff(&formula));
            if let Some(dir) = out {
                let stem = format!("example1_{}_M{m}", rule_tag(rule));
                write_matrix_csv(&t, BufWriter::new(File::create(dir.join(format!("{stem}_matrix.csv")))?))?;
                write_vectors_csv(
                    &t.labels,
                    &[("formula", &formula.values), ("eigen", &eig.values), ("limit", &limit.values)],
                    BufWriter::new(File::create(dir.join(format!("{stem}_stationary.csv")))?),
                )?;
            }
        }
    }
    Ok(worst)
}

/// `max |formula - fixed point|` for example 2 with the ring neighborhood.
pub fn example2_equivalence(ms: &[u32], rules: &[AcceptanceRule]) -> anyhow::Result<f64> {
    let toy = ToyObjective::example2();
    let win = win_table(&toy)?;
    let states: Vec<u32> = toy.states().collect();
    let nbhd = RingNeighborhood::example2();
    let mut worst: f64 = 0.0;
    for rule in rules {
        for &m in ms {
            let t = transition_matrix(&states, &win, &nbhd, m, rule)?;
            let eig = stationary_eig(&t)?;
            worst = worst.max(eig.max_abs_diff(&stationary_formula(&win, m, rule)?));
        }
    }
    Ok(worst)
}

fn optimal_set(toy: &ToyObjective, win: &[f64]) -> anyhow::Result<OptimalSet> {
    Ok(OptimalSet::from_values(toy.table(), win, 1e-12)?)
}

/// Stationary mass on the optimum of example 1 for each `M` in `ms`.
pub fn example1_optimum_mass(ms: &[u32], rule: &AcceptanceRule) -> anyhow::Result<Vec<f64>> {
    let toy = ToyObjective::example1();
    let win = win_table(&toy)?;
    let opt = optimal_set(&toy, &win)?;
    ms.iter()
        .map(|&m| Ok(stationary_formula(&win, m, rule)?.mass_on(&opt.ruler_maximizers)))
        .collect()
}

/// Error measure for concentration: the largest drop in optimum mass
/// between consecutive `M`, or the shortfall of the last mass below
/// `target`, whichever is larger.
pub fn concentration_error(masses: &[f64], target: f64) -> f64 {
    let drop = masses.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
    let shortfall = masses.last().map_or(f64::INFINITY, |m| target - m).max(0.0);
    drop.max(shortfall)
}

/// Largest gap between the negative-binomial bracket and path enumeration,
/// and between the bracket at `n = M` and `P^M`, over the grid.
pub fn bracket_error(max_m: u32) -> anyhow::Result<f64> {
    let mut worst: f64 = 0.0;
    for pi in 1..=9 {
        let p = f64::from(pi) / 10.0;
        for m in 1..=max_m {
            for n in 1..=m {
                let bracket = relaxed_acceptance(p, m, n);
                worst = worst.max((bracket - brute_force_acceptance(p, m, n)?).abs());
                if n == m {
                    worst = worst.max((bracket - acceptance_probability(p, m, &AcceptanceRule::Original)).abs());
                }
            }
        }
    }
    Ok(worst)
}

/// `(s, alpha, M)`.
pub type GridCell = (f64, f64, u32);

/// Over the grid `s in {0.05, ..., 0.95}`, `alpha in {0.1, ..., 0.9}`,
/// `M in {2, ..., 50}`: the largest `E[A | B] - M`, restricted to cells
/// where `ceil(alpha M) < M` when `relaxing_only` is set, and the cells with
/// `E[A | B] >= M`.
pub fn expected_tests_gap(relaxing_only: bool) -> anyhow::Result<(f64, Vec<GridCell>)> {
    let mut worst = f64::NEG_INFINITY;
    let mut violations = Vec::new();
    for si in 1..=19 {
        let s = f64::from(si) / 20.0;
        for ai in 1..=9 {
            let alpha = f64::from(ai) / 10.0;
            for m in 2..=50u32 {
                if relaxing_only && success_threshold(alpha, m) >= m {
                    continue;
                }
                let gap = expected_tests_given_accept(s, alpha, m)? - f64::from(m);
                worst = worst.max(gap);
                if gap >= 0.0 {
                    violations.push((s, alpha, m));
                }
            }
        }
    }
    Ok((worst, violations))
}

/// Mean tests run among accepted evaluations of a candidate whose win
/// probability is `1 - s`, against the closed form. Returns (empirical,
/// formula).
pub fn expected_tests_empirical(s: f64, alpha: f64, m: u32, evaluations: u32, seed: u64) -> anyhow::Result<(f64, f64)> {
    // A constant observation `s` under theta(0, 1) passes with probability 1 - s.
    let ruler = RulerConfig::new(0.0, 1.0)?;
    let problem = ConstantProblem::new(s, ruler);
    let rule = AcceptanceRule::relaxed(alpha)?;
    let base = replication_seed(seed, 0);
    let mut sim = stream(base, Purpose::Simulation);
    let mut rul = stream(base, Purpose::Ruler);
    let (mut tests, mut accepted) = (0u64, 0u64);
    for _ in 0..evaluations {
        let out = evaluate_candidate(&problem, &0, m, &rule, &ruler, &mut sim, &mut rul, None)?;
        if out.accepted {
            tests += u64::from(out.tests_run);
            accepted += 1;
        }
    }
    anyhow::ensure!(accepted > 0, "no evaluation was accepted");
    Ok((tests as f64 / accepted as f64, expected_tests_given_accept(s, alpha, m)?))
}

fn law_checks(report: &mut Report, name: &str, law: &LawReport) {
    report.insert(format!("laws_{name}_stochastic"), Check::within(law.max_row_sum_error + law.bad_support as f64, LAW_TOL));
    report.insert(format!("laws_{name}_symmetric"), Check::within(law.max_asymmetry, LAW_TOL));
    report.insert(format!("laws_{name}_connected"), Check::within((law.components - 1) as f64, 0.0));
}

pub fn example1_laws() -> LawReport {
    check_enumerable(&CompleteNeighborhood::new(10))
}

pub fn example2_laws() -> LawReport {
    check_enumerable(&RingNeighborhood::example2())
}

pub fn facility_laws() -> LawReport {
    check_enumerable(&FacilityProblem::default().neighborhood())
}

pub const PROBES: usize = 10_000;
pub const PROBE_ROWS: usize = 3;
pub const PROBE_STEP_LIMIT: usize = 1_000;

pub fn calibrator_probe(seed: u64) -> anyhow::Result<stochastic_ruler::problems::laws::CalibratorProbe> {
    let p = CalibratorProblem::default();
    let mut rng = stream(replication_seed(seed, 1), Purpose::Proposal);
    Ok(probe_calibrator(
        &p.neighborhood(),
        &p.config().initial_solution(),
        PROBES,
        PROBE_ROWS,
        PROBE_STEP_LIMIT,
        &mut rng,
    )?)
}

/// Runs every check. Matrices and stationary vectors of example 1 go to
/// `out/analysis` when `out` is given.
pub fn verify_all(seed: u64, out: Option<&Path>) -> anyhow::Result<Report> {
    let mut report = Report::new();
    let rules = [
        AcceptanceRule::Original,
        AcceptanceRule::Relaxed { alpha: 0.5 },
        AcceptanceRule::Relaxed { alpha: 0.75 },
    ];
    let dir = match out {
        Some(o) => {
            let d = o.join("analysis");
            fs::create_dir_all(&d)?;
            Some(d)
        }
        None => None,
    };
    report.insert(
        "stationary_equivalence_example1".into(),
        Check::within(example1_equivalence(&EQUIVALENCE_MS, &rules, dir.as_deref())?, STATIONARY_TOL),
    );
    report.insert(
        "stationary_equivalence_example2".into(),
        Check::within(example2_equivalence(&[1, 2, 5, 10], &rules)?, STATIONARY_TOL),
    );
    for rule in [AcceptanceRule::Original, AcceptanceRule::Relaxed { alpha: 0.75 }] {
        let masses = example1_optimum_mass(&CONCENTRATION_MS, &rule)?;
        report.insert(
            format!("concentration_example1_{}", rule_tag(&rule)),
            Check::within(concentration_error(&masses, 0.999), 0.0),
        );
    }
    report.insert("bracket_vs_enumeration".into(), Check::within(bracket_error(12)?, BRACKET_TOL));
    let (gap, _) = expected_tests_gap(false)?;
    report.insert("expected_tests_below_m".into(), Check::strictly_below(gap, 0.0));
    let (gap_relaxing, _) = expected_tests_gap(true)?;
    report.insert("expected_tests_below_m_when_relaxing".into(), Check::strictly_below(gap_relaxing, 0.0));
    let (emp, formula) = expected_tests_empirical(0.5, 0.75, 10, 100_000, seed)?;
    report.insert(
        "expected_tests_empirical".into(),
        Check::within((emp - formula).abs() / formula, EMPIRICAL_REL_TOL),
    );

    for (name, toy) in [("example1", ToyObjective::example1()), ("example2", ToyObjective::example2())] {
        let win = win_table(&toy)?;
        let opt = optimal_set(&toy, &win)?;
        let violations = order_reversal_violations(toy.table(), &win, 1e-12);
        report.insert(format!("order_reversal_{name}"), Check::within(violations.len() as f64, 0.0));
        report.insert(
            format!("optimal_set_{name}"),
            Check::within(if opt.is_consistent() { 0.0 } else { 1.0 }, 0.0),
        );
        let limit = limit_vector(&opt)?;
        for rule in [AcceptanceRule::Original, AcceptanceRule::Relaxed { alpha: 0.75 }] {
            // With a fixed alpha the relaxed vector tends to the uniform law on
            // {P > alpha}, which is wider than the optimum when several states
            // clear alpha (example 2).
            let far = stationary_formula(&win, LIMIT_M, &rule)?;
            report.insert(
                format!("limit_vector_{name}_{}", rule_tag(&rule)),
                Check::within(far.max_abs_diff(&limit), LIMIT_TOL),
            );
        }
    }

    law_checks(&mut report, "example1", &example1_laws());
    law_checks(&mut report, "example2", &example2_laws());
    law_checks(&mut report, "facility", &facility_laws());
    let probe = calibrator_probe(seed)?;
    report.insert(
        "laws_calibrator_stochastic".into(),
        Check::within(probe.max_row_sum_error + (probe.infeasible + probe.bad_support) as f64, LAW_TOL),
    );
    report.insert("laws_calibrator_symmetric".into(), Check::within(probe.max_asymmetry, LAW_TOL));
    report.insert(
        "laws_calibrator_connected".into(),
        Check::within(probe.steps_to_full_change.map_or(f64::INFINITY, |s| s as f64), PROBE_STEP_LIMIT as f64),
    );
    Ok(report)
}

pub fn write_report(report: &Report, path: &Path) -> anyhow::Result<()> {
    let file = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(file, report)?;
    Ok(())
}
