//! Exact transition matrices of the constant-`M` chain.

use std::collections::HashMap;
use std::fmt::Display;
use std::hash::Hash;

use nalgebra::DMatrix;
use crate::analysis::acceptance::acceptance_probability;
use crate::error::{Error, Result};
use crate::problem::EnumerableNeighborhood;
use crate::schedule::AcceptanceRule;

/// Tolerance for `R(x, x') = R(x', x)`.
const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    pub labels: Vec<String>,
    pub matrix: DMatrix<f64>,
    pub rule: AcceptanceRule,
    pub m: u32,
}

impl TransitionMatrix {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.matrix[(from, to)]
    }

    /// Largest `|sum_j T[i, j] - 1|` over rows.
    pub fn max_row_sum_error(&self) -> f64 {
        self.matrix
            .row_iter()
            .map(|r| (r.sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Builds the one-step matrix of the chain with every candidate allotted
/// `m` tests:
///
/// * `T[x, x'] = R(x, x') A(P(x'))` for `x' in N(x)`,
/// * `T[x, x] = 1 - sum over x' != x of T[x, x']`,
///
/// where `A` is the acceptance probability of `rule`. `win[i]` is the win
/// probability of `states[i]`.
pub fn transition_matrix<S, N>(
    states: &[S],
    win: &[f64],
    neighborhood: &N,
    m: u32,
    rule: &AcceptanceRule,
) -> Result<TransitionMatrix>
where
    S: Clone + Eq + Hash + Display,
    N: EnumerableNeighborhood<S> + ?Sized,
{
    if states.len() != win.len() {
        return Err(Error::InvalidConfig(format!(
            "{} states but {} win probabilities",
            states.len(),
            win.len()
        )));
    }
    if m == 0 {
        return Err(Error::InvalidConfig("M must be at least 1".into()));
    }
    rule.validate()?;
    let index: HashMap<&S, usize> = states.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let kappa = states.len();

    let mut proposal = DMatrix::<f64>::zeros(kappa, kappa);
    for (i, x) in states.iter().enumerate() {
        for (z, r) in neighborhood.neighbors(x) {
            let j = *index
                .get(&z)
                .ok_or_else(|| Error::Infeasible(z.to_string()))?;
            if j != i {
                proposal[(i, j)] += r;
            }
        }
    }
    for i in 0..kappa {
        for j in (i + 1)..kappa {
            let (fwd, bwd) = (proposal[(i, j)], proposal[(j, i)]);
            if (fwd - bwd).abs() > SYMMETRY_TOL {
                return Err(Error::AsymmetricNeighborhood {
                    from: states[i].to_string(),
                    to: states[j].to_string(),
                    forward: fwd,
                    backward: bwd,
                });
            }
        }
    }

    let accept: Vec<f64> = win.iter().map(|&p| acceptance_probability(p, m, rule)).collect();
    let mut matrix = DMatrix::<f64>::zeros(kappa, kappa);
    for i in 0..kappa {
        let mut leave = 0.0;
        for j in 0..kappa {
            if j != i && proposal[(i, j)] > 0.0 {
                let v = proposal[(i, j)] * accept[j];
                matrix[(i, j)] = v;
                leave += v;
            }
        }
        matrix[(i, i)] = 1.0 - leave;
    }
    Ok(TransitionMatrix {
        labels: states.iter().map(|s| s.to_string()).collect(),
        matrix,
        rule: *rule,
        m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::acceptance::brute_force_acceptance;
    use crate::analysis::win::win_probability;
    use crate::problem::Neighborhood;
    use crate::problem::SimulationProblem;
    use crate::problems::toy::{CompleteNeighborhood, ToyObjective};
    use rand::Rng;

    fn example1_win() -> Vec<f64> {
        let toy = ToyObjective::example1();
        toy.states()
            .map(|x| win_probability(&toy.distribution(x).unwrap(), &toy.default_ruler()).unwrap().value)
            .collect()
    }

    #[test]
    fn two_state_original_by_hand() {
        let nbhd = CompleteNeighborhood::new(2);
        let t = transition_matrix(&[1u32, 2], &[0.9, 0.5], &nbhd, 3, &AcceptanceRule::Original).unwrap();
        assert!((t.get(0, 1) - 0.125).abs() < 1e-15);
        assert!((t.get(0, 0) - 0.875).abs() < 1e-15);
        assert!((t.get(1, 0) - 0.729).abs() < 1e-15);
    }

    #[test]
    fn example1_relaxed_entries_compose_the_oracle() {
        let win = example1_win();
        let nbhd = CompleteNeighborhood::new(10);
        let states: Vec<u32> = (1..=10).collect();
        let t = transition_matrix(&states, &win, &nbhd, 2, &AcceptanceRule::Relaxed { alpha: 0.5 }).unwrap();
        for i in 0..10 {
            for j in 0..10 {
                if i != j {
                    let expect = brute_force_acceptance(win[j], 2, 1).unwrap() / 9.0;
                    assert!((t.get(i, j) - expect).abs() < 1e-15);
                }
            }
        }
        assert!(t.max_row_sum_error() < 1e-12);
    }

    struct Lopsided;

    impl Neighborhood<u32> for Lopsided {
        fn propose<R: Rng + ?Sized>(&self, _x: &u32, _rng: &mut R) -> Result<u32> {
            unreachable!()
        }
    }

    impl EnumerableNeighborhood<u32> for Lopsided {
        fn states(&self) -> Vec<u32> {
            vec![1, 2, 3]
        }
        fn neighbors(&self, x: &u32) -> Vec<(u32, f64)> {
            match x {
                1 => vec![(2, 0.5), (3, 0.5)],
                2 => vec![(1, 1.0)],
                _ => vec![(1, 1.0)],
            }
        }
    }

    #[test]
    fn asymmetric_neighborhood_rejected() {
        let err = transition_matrix(&[1u32, 2, 3], &[0.5; 3], &Lopsided, 2, &AcceptanceRule::Original)
            .unwrap_err();
        assert!(matches!(err, Error::AsymmetricNeighborhood { .. }));
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let nbhd = CompleteNeighborhood::new(2);
        assert!(transition_matrix(&[1u32, 2], &[0.5], &nbhd, 1, &AcceptanceRule::Original).is_err());
    }
}
