//! Problem and neighborhood abstractions.
//!
//! A [`SimulationProblem`] is a black-box replicate sampler `H(x) = h(x, Y_x)`
//! over a discrete feasible set. A [`Neighborhood`] proposes candidates `z`
//! from `N(x)` with transition probability `R(x, z)`.

use std::fmt::{Debug, Display};
use std::hash::Hash;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ruler::RulerConfig;

pub trait SimulationProblem: Sync {
    type Solution: Clone + Debug + Display + PartialEq + Serialize + Send + Sync;

    fn name(&self) -> &str;

    fn is_feasible(&self, x: &Self::Solution) -> bool;

    /// One replicate observation of `H(x)`.
    fn sample<R: Rng + ?Sized>(&self, x: &Self::Solution, rng: &mut R) -> Result<f64>;

    /// The ruler this problem was designed for.
    fn default_ruler(&self) -> RulerConfig;

    /// `f(x) = E[H(x)]` when it is known in closed form.
    fn exact_mean(&self, _x: &Self::Solution) -> Option<f64> {
        None
    }

    /// The global minimizers, when known in advance.
    fn known_optima(&self) -> Option<Vec<Self::Solution>> {
        None
    }

    fn check_feasible(&self, x: &Self::Solution) -> Result<()> {
        if self.is_feasible(x) {
            Ok(())
        } else {
            Err(Error::Infeasible(x.to_string()))
        }
    }
}

pub trait Neighborhood<S> {
    /// Draws a candidate `z` with probability `R(x, z)`.
    ///
    /// Structures whose `R` keeps mass on `x` itself (see
    /// [`EnumerableNeighborhood::stay_probability`]) return `x` unchanged when
    /// that mass is drawn.
    fn propose<R: Rng + ?Sized>(&self, x: &S, rng: &mut R) -> Result<S>;
}

/// A neighborhood over a finite, enumerable solution space.
pub trait EnumerableNeighborhood<S: Clone + Eq + Hash>: Neighborhood<S> {
    fn states(&self) -> Vec<S>;

    /// The members of `N(x)` with their transition probabilities `R(x, x')`.
    fn neighbors(&self, x: &S) -> Vec<(S, f64)>;

    /// `R(x, x)`: probability that a proposal leaves the state unchanged.
    fn stay_probability(&self, _x: &S) -> f64 {
        0.0
    }
}

/// Draws from a discrete distribution given as `(value, weight)` pairs whose
/// weights sum to one.
pub(crate) fn draw_weighted<S: Clone, R: Rng + ?Sized>(
    items: &[(S, f64)],
    rng: &mut R,
) -> Option<S> {
    let (last, _) = items.last()?;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (item, w) in items {
        acc += w;
        if u < acc {
            return Some(item.clone());
        }
    }
    Some(last.clone())
}
