//! Stationary distributions of the constant-`M` chain: the closed-form
//! vector, a power-iteration fixed point used to cross-check it, and the
//! large-`M` limit.

use nalgebra::{DMatrix, RowDVector};
use serde::{Deserialize, Serialize};

use crate::analysis::acceptance::{ln_acceptance_probability, log_sum_exp};
use crate::analysis::chain::TransitionMatrix;
use crate::error::{Error, Result};
use crate::schedule::AcceptanceRule;

/// Residual target for the power-iteration fixed point.
pub const RESIDUAL_TOL: f64 = 1e-12;

/// Squarings of the lazy matrix before giving up, i.e. up to 2^64 steps.
const MAX_DOUBLINGS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StationarySource {
    Formula,
    Eigen,
    Limit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryVector {
    pub values: Vec<f64>,
    pub source: StationarySource,
}

impl StationaryVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs_diff(&self, other: &StationaryVector) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Mass placed on the given state indices.
    pub fn mass_on(&self, indices: &[usize]) -> f64 {
        indices.iter().map(|&i| self.values[i]).sum()
    }

    /// `max_j |(pi T)_j - pi_j|`.
    pub fn residual(&self, t: &TransitionMatrix) -> f64 {
        let pi = RowDVector::from_row_slice(&self.values);
        let next = &pi * &t.matrix;
        (next - pi).amax()
    }
}

/// The stationary vector in closed form: `pi_x` proportional to the
/// acceptance probability of `x` as a candidate, i.e. `P(x)^M` for the
/// original rule and the negative-binomial bracket for the relaxed rule.
/// Weights are normalised in log space so large `M` does not underflow.
pub fn stationary_formula(win: &[f64], m: u32, rule: &AcceptanceRule) -> Result<StationaryVector> {
    if win.is_empty() {
        return Err(Error::InvalidConfig("no states".into()));
    }
    if let Some(p) = win.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
        return Err(Error::InvalidConfig(format!("win probability {p} outside (0, 1]")));
    }
    rule.validate()?;
    let logs: Vec<f64> = win.iter().map(|&p| ln_acceptance_probability(p, m, rule)).collect();
    let norm = log_sum_exp(&logs);
    Ok(StationaryVector {
        values: logs.iter().map(|l| (l - norm).exp()).collect(),
        source: StationarySource::Formula,
    })
}

fn normalize_rows(m: &mut DMatrix<f64>) {
    for mut row in m.row_iter_mut() {
        let s = row.sum();
        row /= s;
    }
}

/// The fixed point `pi T = pi`, found by powering the lazy chain
/// `(I + T) / 2` (same stationary law, aperiodic) through repeated squaring
/// until all rows agree, then checking the residual against `T`.
pub fn stationary_eig(t: &TransitionMatrix) -> Result<StationaryVector> {
    let n = t.len();
    if n == 0 {
        return Err(Error::InvalidConfig("empty matrix".into()));
    }
    let mut power = (DMatrix::<f64>::identity(n, n) + &t.matrix) * 0.5;
    let mut residual = f64::INFINITY;
    for doubling in 1..=MAX_DOUBLINGS {
        power = &power * &power;
        normalize_rows(&mut power);
        let spread = power
            .column_iter()
            .map(|c| c.max() - c.min())
            .fold(0.0, f64::max);
        if spread > RESIDUAL_TOL {
            continue;
        }
        let mean = power.row_mean();
        let total = mean.sum();
        let pi = StationaryVector {
            values: mean.iter().map(|v| v / total).collect(),
            source: StationarySource::Eigen,
        };
        residual = pi.residual(t);
        if residual <= RESIDUAL_TOL {
            return Ok(pi);
        }
        if doubling == MAX_DOUBLINGS {
            break;
        }
    }
    Err(Error::NotConverged {
        iterations: MAX_DOUBLINGS,
        residual,
    })
}

/// `S*` (minimizers of `f`) and `S*(a, b)` (maximizers of `P(x, a, b)`) as
/// state indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalSet {
    pub size: usize,
    pub minimizers: Vec<usize>,
    pub ruler_maximizers: Vec<usize>,
}

impl OptimalSet {
    pub fn from_values(f: &[f64], win: &[f64], tol: f64) -> Result<Self> {
        if f.len() != win.len() || f.is_empty() {
            return Err(Error::InvalidConfig("objective and win tables must match".into()));
        }
        let fmin = f.iter().copied().fold(f64::INFINITY, f64::min);
        let pmax = win.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(OptimalSet {
            size: f.len(),
            minimizers: (0..f.len()).filter(|&i| f[i] <= fmin + tol).collect(),
            ruler_maximizers: (0..win.len()).filter(|&i| win[i] >= pmax - tol).collect(),
        })
    }

    /// `S*(a, b)` is a non-empty subset of `S*`.
    pub fn is_consistent(&self) -> bool {
        !self.ruler_maximizers.is_empty()
            && self.ruler_maximizers.iter().all(|i| self.minimizers.contains(i))
    }
}

/// The large-`M` limit: uniform on `S*(a, b)`, zero elsewhere.
pub fn limit_vector(optimal: &OptimalSet) -> Result<StationaryVector> {
    if optimal.ruler_maximizers.is_empty() {
        return Err(Error::EmptyOptimalSet);
    }
    let share = 1.0 / optimal.ruler_maximizers.len() as f64;
    let mut values = vec![0.0; optimal.size];
    for &i in &optimal.ruler_maximizers {
        values[i] = share;
    }
    Ok(StationaryVector {
        values,
        source: StationarySource::Limit,
    })
}

/// Pairs `(i, j)` breaking the order reversal between `f` and `P`: `f_i <
/// f_j` must imply `P_i > P_j`, and equal `f` must give equal `P`.
pub fn order_reversal_violations(f: &[f64], win: &[f64], tol: f64) -> Vec<(usize, usize)> {
    let mut bad = Vec::new();
    for i in 0..f.len() {
        for j in 0..f.len() {
            if i == j {
                continue;
            }
            let broken = if f[i] < f[j] {
                win[i] <= win[j]
            } else if f[i] == f[j] {
                (win[i] - win[j]).abs() > tol
            } else {
                false
            };
            if broken {
                bad.push((i, j));
            }
        }
    }
    bad
}
