//! Checks of the structural laws a neighborhood must satisfy for the
//! convergence theory: rows of `R` are distributions supported on `N(x)`,
//! `R` is symmetric, and the neighbor graph is connected.

use std::collections::{HashMap, VecDeque};
use std::hash::Hash;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::problem::{EnumerableNeighborhood, Neighborhood};
use crate::problems::calibrator::{Calibrators, CalibratorNeighborhood};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawReport {
    pub states: usize,
    /// Largest `|sum_x' R(x, x') + R(x, x) - 1|`.
    pub max_row_sum_error: f64,
    /// Neighbors proposed outside the state space, or with non-positive mass.
    pub bad_support: usize,
    /// Largest `|R(x, x') - R(x', x)|`.
    pub max_asymmetry: f64,
    /// Connected components of the neighbor graph.
    pub components: usize,
}

impl LawReport {
    pub fn is_stochastic(&self, tol: f64) -> bool {
        self.bad_support == 0 && self.max_row_sum_error <= tol
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.max_asymmetry <= tol
    }

    pub fn is_connected(&self) -> bool {
        self.components == 1
    }
}

/// Exhaustive check over every state of an enumerable neighborhood.
pub fn check_enumerable<S, N>(nbhd: &N) -> LawReport
where
    S: Clone + Eq + Hash,
    N: EnumerableNeighborhood<S> + ?Sized,
{
    let states = nbhd.states();
    let index: HashMap<&S, usize> = states.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let mut bad_support = 0;
    let mut max_row_sum_error: f64 = 0.0;
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(states.len());
    for (i, x) in states.iter().enumerate() {
        let mut row: Vec<(usize, f64)> = Vec::new();
        let mut sum = nbhd.stay_probability(x);
        for (z, r) in nbhd.neighbors(x) {
            sum += r;
            match index.get(&z) {
                Some(&j) if r > 0.0 && j != i => match row.iter_mut().find(|(k, _)| *k == j) {
                    Some(entry) => entry.1 += r,
                    None => row.push((j, r)),
                },
                _ => bad_support += 1,
            }
        }
        max_row_sum_error = max_row_sum_error.max((sum - 1.0).abs());
        rows.push(row);
    }

    let mut max_asymmetry: f64 = 0.0;
    for (i, row) in rows.iter().enumerate() {
        for &(j, r) in row {
            let back = rows[j].iter().find(|(k, _)| *k == i).map_or(0.0, |e| e.1);
            max_asymmetry = max_asymmetry.max((r - back).abs());
        }
    }

    LawReport {
        states: states.len(),
        max_row_sum_error,
        bad_support,
        max_asymmetry,
        components: count_components(&rows),
    }
}

/// Components of the graph with an edge wherever either direction has
/// positive mass.
fn count_components(rows: &[Vec<(usize, f64)>]) -> usize {
    let n = rows.len();
    let mut adj: Vec<Vec<usize>> = rows.iter().map(|r| r.iter().map(|e| e.0).collect()).collect();
    for (i, row) in rows.iter().enumerate() {
        for &(j, _) in row {
            adj[j].push(i);
        }
    }
    let mut seen = vec![false; n];
    let mut components = 0;
    let mut queue = VecDeque::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    components
}

/// Randomized check of the calibrator neighborhood, whose state space is too
/// large to enumerate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratorProbe {
    /// States visited by the probing walk.
    pub probed: usize,
    /// Proposals that left the feasible set.
    pub infeasible: usize,
    /// Proposals `z != x` with `R(x, z) = 0`.
    pub bad_support: usize,
    /// Largest `|R(x, z) - R(z, x)|` over probed pairs.
    pub max_asymmetry: f64,
    /// Rows whose sum was computed exhaustively.
    pub rows_checked: usize,
    pub max_row_sum_error: f64,
    /// Proposals until a vector differing from the start in every component
    /// was reached, if it was within the step limit.
    pub steps_to_full_change: Option<usize>,
}

impl CalibratorProbe {
    pub fn passes(&self, tol: f64, step_limit: usize) -> bool {
        self.infeasible == 0
            && self.bad_support == 0
            && self.max_asymmetry <= tol
            && self.max_row_sum_error <= tol
            && self.steps_to_full_change.is_some_and(|s| s <= step_limit)
    }
}

/// Walks `probes` proposals from `start`, comparing the exact `R(x, z)` and
/// `R(z, x)` for every proposed `z`, sums `rows` complete rows along the way,
/// and separately walks from `start` until every calibrator has moved.
pub fn probe_calibrator<R: Rng + ?Sized>(
    nbhd: &CalibratorNeighborhood,
    start: &Calibrators,
    probes: usize,
    rows: usize,
    step_limit: usize,
    rng: &mut R,
) -> Result<CalibratorProbe> {
    let cfg = nbhd.config();
    let mut report = CalibratorProbe {
        probed: 0,
        infeasible: 0,
        bad_support: 0,
        max_asymmetry: 0.0,
        rows_checked: 0,
        max_row_sum_error: 0.0,
        steps_to_full_change: None,
    };
    let row_every = probes.checked_div(rows).map_or(usize::MAX, |r| r.max(1));
    let mut x = start.clone();
    for step in 0..probes {
        let z = nbhd.propose(&x, rng)?;
        report.probed += 1;
        if !cfg.is_feasible(z.values()) {
            report.infeasible += 1;
            x = start.clone();
            continue;
        }
        if z != x {
            let fwd = nbhd.transition_probability(&x, &z);
            let bwd = nbhd.transition_probability(&z, &x);
            if fwd <= 0.0 {
                report.bad_support += 1;
            }
            report.max_asymmetry = report.max_asymmetry.max((fwd - bwd).abs());
        }
        if step % row_every == 0 && report.rows_checked < rows {
            let sum: f64 = nbhd
                .candidates(&x)
                .iter()
                .map(|c| nbhd.transition_probability(&x, c))
                .sum();
            report.rows_checked += 1;
            report.max_row_sum_error = report.max_row_sum_error.max((sum - 1.0).abs());
        }
        x = z;
    }

    let mut walk = start.clone();
    for step in 1..=step_limit {
        walk = nbhd.propose(&walk, rng)?;
        if walk.values().iter().zip(start.values()).all(|(a, b)| a != b) {
            report.steps_to_full_change = Some(step);
            break;
        }
    }
    Ok(report)
}
