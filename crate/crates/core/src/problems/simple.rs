//! Degenerate problems with exactly known behavior, used to check the
//! search machinery.

use rand::Rng;

use crate::error::{Error, Result};
use crate::problem::{EnumerableNeighborhood, Neighborhood, SimulationProblem};
use crate::ruler::RulerConfig;

/// Two solutions `{0, 1}` that both always produce the same observation.
#[derive(Debug, Clone)]
pub struct ConstantProblem {
    value: f64,
    ruler: RulerConfig,
}

impl ConstantProblem {
    pub fn new(value: f64, ruler: RulerConfig) -> Self {
        ConstantProblem { value, ruler }
    }
}

impl SimulationProblem for ConstantProblem {
    type Solution = u32;

    fn name(&self) -> &str {
        "constant"
    }

    fn is_feasible(&self, x: &u32) -> bool {
        *x <= 1
    }

    fn sample<R: Rng + ?Sized>(&self, x: &u32, _rng: &mut R) -> Result<f64> {
        self.check_feasible(x)?;
        Ok(self.value)
    }

    fn default_ruler(&self) -> RulerConfig {
        self.ruler
    }

    fn exact_mean(&self, _x: &u32) -> Option<f64> {
        Some(self.value)
    }
}

/// `N(0) = {1}`, `N(1) = {0}`.
#[derive(Debug, Clone, Copy, Default)]
pub struct PairNeighborhood;

impl Neighborhood<u32> for PairNeighborhood {
    fn propose<R: Rng + ?Sized>(&self, x: &u32, _rng: &mut R) -> Result<u32> {
        match x {
            0 => Ok(1),
            1 => Ok(0),
            _ => Err(Error::Infeasible(x.to_string())),
        }
    }
}

impl EnumerableNeighborhood<u32> for PairNeighborhood {
    fn states(&self) -> Vec<u32> {
        vec![0, 1]
    }

    fn neighbors(&self, x: &u32) -> Vec<(u32, f64)> {
        vec![(1 - x, 1.0)]
    }
}
