//! Stochastic facility location on a square grid.
//!
//! Three facilities occupy distinct squares of a 6 x 6 grid. Every day each
//! square draws a normal demand that travels the rectilinear distance to its
//! nearest facility; one replicate is the demand-weighted distance averaged
//! over squares and days.

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::problem::{EnumerableNeighborhood, Neighborhood, SimulationProblem};
use crate::ruler::RulerConfig;

/// A grid square `(i, j)`, both 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Square {
    pub i: u8,
    pub j: u8,
}

impl Square {
    pub fn new(i: u8, j: u8) -> Self {
        Square { i, j }
    }

    /// Rectilinear distance within the grid (no wraparound).
    pub fn distance(&self, other: &Square) -> u32 {
        (self.i.abs_diff(other.i) + self.j.abs_diff(other.j)) as u32
    }

    /// The four neighbours on the torus: `(i-1, j), (i+1, j), (i, j-1),
    /// (i, j+1)`, each coordinate wrapping around at the edges.
    pub fn torus_neighbors(&self, side: u8) -> [Square; 4] {
        let down = |v: u8| if v == 1 { side } else { v - 1 };
        let up = |v: u8| if v == side { 1 } else { v + 1 };
        [
            Square::new(down(self.i), self.j),
            Square::new(up(self.i), self.j),
            Square::new(self.i, down(self.j)),
            Square::new(self.i, up(self.j)),
        ]
    }
}

impl fmt::Display for Square {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.i, self.j)
    }
}

/// Facility squares, in facility order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Placement(pub Vec<Square>);

impl Placement {
    pub fn squares(&self) -> &[Square] {
        &self.0
    }

    pub fn has_duplicates(&self) -> bool {
        self.0.iter().enumerate().any(|(k, s)| self.0[..k].contains(s))
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        write!(f, "{}", parts.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacilityConfig {
    pub side: u8,
    pub facilities: usize,
    pub demand_mean: f64,
    pub demand_sd: f64,
    /// `T_0`: simulated days per replicate.
    pub horizon: u32,
    pub ruler: RulerConfig,
    pub initial: Vec<Square>,
}

impl Default for FacilityConfig {
    fn default() -> Self {
        FacilityConfig {
            side: 6,
            facilities: 3,
            demand_mean: 180.0,
            demand_sd: 30.0,
            horizon: 30,
            ruler: RulerConfig::new(250.0, 800.0).expect("valid ruler"),
            initial: vec![Square::new(1, 1), Square::new(1, 2), Square::new(2, 1)],
        }
    }
}

impl FacilityConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(format!("facility: {msg}")));
        if self.side < 3 {
            return bad("grid side must be at least 3");
        }
        if self.facilities == 0 || self.facilities > self.squares() {
            return bad("facility count must fit on the grid");
        }
        if !(self.demand_mean > 0.0) || !(self.demand_sd >= 0.0) {
            return bad("demand needs a positive mean and non-negative sd");
        }
        if self.horizon == 0 {
            return bad("horizon must be at least one day");
        }
        if !self.is_feasible(&Placement(self.initial.clone())) {
            return bad("initial placement is infeasible");
        }
        Ok(())
    }

    pub fn squares(&self) -> usize {
        self.side as usize * self.side as usize
    }

    pub fn grid(&self) -> impl Iterator<Item = Square> + '_ {
        (1..=self.side).flat_map(move |i| (1..=self.side).map(move |j| Square::new(i, j)))
    }

    pub fn on_grid(&self, s: &Square) -> bool {
        (1..=self.side).contains(&s.i) && (1..=self.side).contains(&s.j)
    }

    pub fn is_feasible(&self, x: &Placement) -> bool {
        x.0.len() == self.facilities && x.0.iter().all(|s| self.on_grid(s)) && !x.has_duplicates()
    }

    pub fn initial_solution(&self) -> Placement {
        Placement(self.initial.clone())
    }

    /// Distance from each grid square, in [`FacilityConfig::grid`] order, to
    /// its nearest facility.
    pub fn nearest_distances(&self, x: &Placement) -> Vec<u32> {
        self.grid()
            .map(|s| x.0.iter().map(|f| s.distance(f)).min().unwrap_or(0))
            .collect()
    }

    /// Mean demand after negative draws are resampled, i.e. the mean of the
    /// normal truncated to `[0, inf)`.
    pub fn effective_demand_mean(&self) -> f64 {
        if self.demand_sd == 0.0 {
            return self.demand_mean;
        }
        let z = self.demand_mean / self.demand_sd;
        let pdf = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let cdf = 0.5 * erfc(-z / std::f64::consts::SQRT_2);
        self.demand_mean + self.demand_sd * pdf / cdf
    }
}

/// One replicate of the average daily demand-weighted travel distance.
pub fn facility_sample<R: Rng + ?Sized>(cfg: &FacilityConfig, x: &Placement, rng: &mut R) -> Result<f64> {
    if !cfg.is_feasible(x) {
        return Err(Error::Infeasible(x.to_string()));
    }
    let normal = Normal::new(cfg.demand_mean, cfg.demand_sd).map_err(|e| Error::Sampler(e.to_string()))?;
    let dist = cfg.nearest_distances(x);
    let squares = dist.len() as f64;
    let mut total = 0.0;
    for _ in 0..cfg.horizon {
        let mut day = 0.0;
        for &d in &dist {
            let demand = loop {
                let v = normal.sample(rng);
                if v >= 0.0 {
                    break v;
                }
            };
            day += demand * d as f64;
        }
        total += day / squares;
    }
    Ok(total / cfg.horizon as f64)
}

#[derive(Debug, Clone)]
pub struct FacilityProblem {
    cfg: FacilityConfig,
}

impl FacilityProblem {
    pub fn new(cfg: FacilityConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(FacilityProblem { cfg })
    }

    pub fn config(&self) -> &FacilityConfig {
        &self.cfg
    }

    pub fn neighborhood(&self) -> FacilityNeighborhood {
        FacilityNeighborhood { side: self.cfg.side, facilities: self.cfg.facilities }
    }
}

impl Default for FacilityProblem {
    fn default() -> Self {
        FacilityProblem::new(FacilityConfig::default()).expect("default config is valid")
    }
}

impl SimulationProblem for FacilityProblem {
    type Solution = Placement;

    fn name(&self) -> &str {
        "facility"
    }

    fn is_feasible(&self, x: &Placement) -> bool {
        self.cfg.is_feasible(x)
    }

    fn sample<R: Rng + ?Sized>(&self, x: &Placement, rng: &mut R) -> Result<f64> {
        facility_sample(&self.cfg, x, rng)
    }

    fn default_ruler(&self) -> RulerConfig {
        self.cfg.ruler
    }

    fn exact_mean(&self, x: &Placement) -> Option<f64> {
        if !self.cfg.is_feasible(x) {
            return None;
        }
        let dist = self.cfg.nearest_distances(x);
        let mean_dist = dist.iter().sum::<u32>() as f64 / dist.len() as f64;
        Some(self.cfg.effective_demand_mean() * mean_dist)
    }
}

/// Every facility moves to one of its four torus neighbours, uniformly and
/// independently, so each of the `4^k` joint moves has probability `4^-k`.
/// A joint move that puts two facilities on one square is not a valid
/// placement; its mass stays on the current placement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FacilityNeighborhood {
    pub side: u8,
    pub facilities: usize,
}

impl FacilityNeighborhood {
    fn joint_moves(&self) -> usize {
        4usize.pow(self.facilities as u32)
    }

    fn apply(&self, x: &Placement, mut code: usize) -> Placement {
        Placement(
            x.0.iter()
                .map(|s| {
                    let dir = code % 4;
                    code /= 4;
                    s.torus_neighbors(self.side)[dir]
                })
                .collect(),
        )
    }

    fn check(&self, x: &Placement) -> Result<()> {
        let on_grid = |s: &Square| (1..=self.side).contains(&s.i) && (1..=self.side).contains(&s.j);
        if x.0.len() != self.facilities || !x.0.iter().all(on_grid) || x.has_duplicates() {
            return Err(Error::Infeasible(x.to_string()));
        }
        Ok(())
    }
}

impl Neighborhood<Placement> for FacilityNeighborhood {
    fn propose<R: Rng + ?Sized>(&self, x: &Placement, rng: &mut R) -> Result<Placement> {
        self.check(x)?;
        let z = self.apply(x, rng.random_range(0..self.joint_moves()));
        Ok(if z.has_duplicates() { x.clone() } else { z })
    }
}

impl EnumerableNeighborhood<Placement> for FacilityNeighborhood {
    /// All ordered placements of distinct squares.
    fn states(&self) -> Vec<Placement> {
        let grid: Vec<Square> = (1..=self.side)
            .flat_map(|i| (1..=self.side).map(move |j| Square::new(i, j)))
            .collect();
        let mut out = Vec::new();
        let mut current = Vec::with_capacity(self.facilities);
        fn extend(grid: &[Square], k: usize, current: &mut Vec<Square>, out: &mut Vec<Placement>) {
            if current.len() == k {
                out.push(Placement(current.clone()));
                return;
            }
            for s in grid {
                if !current.contains(s) {
                    current.push(*s);
                    extend(grid, k, current, out);
                    current.pop();
                }
            }
        }
        extend(&grid, self.facilities, &mut current, &mut out);
        out
    }

    fn neighbors(&self, x: &Placement) -> Vec<(Placement, f64)> {
        let r = 1.0 / self.joint_moves() as f64;
        (0..self.joint_moves())
            .map(|code| self.apply(x, code))
            .filter(|z| !z.has_duplicates())
            .map(|z| (z, r))
            .collect()
    }

    fn stay_probability(&self, x: &Placement) -> f64 {
        let collisions = (0..self.joint_moves())
            .filter(|&code| self.apply(x, code).has_duplicates())
            .count();
        collisions as f64 / self.joint_moves() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    fn sq(i: u8, j: u8) -> Square {
        Square::new(i, j)
    }

    /// Demand-weighted mean distance by direct enumeration of the grid.
    fn enumeration_oracle(side: u8, facilities: &[(u8, u8)], demand: f64) -> f64 {
        let mut total = 0i64;
        for i in 1..=side as i64 {
            for j in 1..=side as i64 {
                total += facilities
                    .iter()
                    .map(|&(fi, fj)| (i - fi as i64).abs() + (j - fj as i64).abs())
                    .min()
                    .unwrap();
            }
        }
        demand * total as f64 / (side as f64 * side as f64)
    }

    #[test]
    fn torus_neighbor_listings() {
        assert_eq!(sq(3, 3).torus_neighbors(6), [sq(2, 3), sq(4, 3), sq(3, 2), sq(3, 4)]);
        assert_eq!(sq(1, 4).torus_neighbors(6), [sq(6, 4), sq(2, 4), sq(1, 3), sq(1, 5)]);
        assert_eq!(sq(4, 1).torus_neighbors(6), [sq(3, 1), sq(5, 1), sq(4, 6), sq(4, 2)]);
        assert_eq!(sq(1, 1).torus_neighbors(6), [sq(6, 1), sq(2, 1), sq(1, 6), sq(1, 2)]);
    }

    #[test]
    fn rectilinear_distances() {
        assert_eq!(sq(3, 4).distance(&sq(1, 1)), 5);
        assert_eq!(sq(2, 2).distance(&sq(2, 2)), 0);
        let cfg = FacilityConfig { facilities: 1, initial: vec![sq(1, 1)], ..FacilityConfig::default() };
        let d = cfg.nearest_distances(&Placement(vec![sq(1, 1)]));
        // Square (3,4) sits at index 2 * 6 + 3.
        assert_eq!(d[2 * 6 + 3], 5);
        assert_eq!(d[0], 0);
    }

    #[test]
    fn deterministic_demand_matches_enumeration() {
        let cfg = FacilityConfig { demand_sd: 0.0, ..FacilityConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for fac in [[(1, 1), (1, 2), (2, 1)], [(2, 2), (5, 5), (2, 5)], [(6, 6), (1, 1), (3, 4)]] {
            let x = Placement(fac.iter().map(|&(i, j)| sq(i, j)).collect());
            let got = facility_sample(&cfg, &x, &mut rng).unwrap();
            let expect = enumeration_oracle(6, &fac, 180.0);
            assert!((got - expect).abs() <= 1e-12 * expect, "{x}: {got} vs {expect}");
        }
    }

    #[test]
    fn sample_mean_tracks_exact_mean() {
        let p = FacilityProblem::default();
        let x = p.config().initial_solution();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 2000;
        let draws: Vec<f64> = (0..n).map(|_| p.sample(&x, &mut rng).unwrap()).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let sd = (draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        let exact = p.exact_mean(&x).unwrap();
        assert!((mean - exact).abs() < 4.0 * sd / (n as f64).sqrt(), "{mean} vs {exact}");
    }

    #[test]
    fn corner_start_leaves_room_for_halving() {
        let p = FacilityProblem::default();
        let start = p.exact_mean(&p.config().initial_solution()).unwrap();
        let spread = Placement(vec![sq(2, 2), sq(5, 3), sq(2, 5)]);
        let good = p.exact_mean(&spread).unwrap();
        assert!(p.default_ruler().covers(start), "{start}");
        assert!(good < 0.5 * start, "{good} vs {start}");
    }

    #[test]
    fn duplicates_rejected() {
        let p = FacilityProblem::default();
        let dup = Placement(vec![sq(1, 1), sq(1, 1), sq(2, 2)]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(p.sample(&dup, &mut rng).is_err());
        assert!(p.neighborhood().propose(&dup, &mut rng).is_err());
        let off = Placement(vec![sq(0, 1), sq(1, 1), sq(2, 2)]);
        assert!(!p.is_feasible(&off));
    }

    #[test]
    fn state_count() {
        let n = FacilityProblem::default().neighborhood();
        assert_eq!(n.states().len(), 36 * 35 * 34);
    }

    #[test]
    fn neighbor_mass_and_collisions() {
        let n = FacilityProblem::default().neighborhood();
        let far = Placement(vec![sq(1, 1), sq(3, 3), sq(5, 5)]);
        assert_eq!(n.neighbors(&far).len(), 64);
        assert_eq!(n.stay_probability(&far), 0.0);
        // Only (1,1) -> (1,2) together with (1,3) -> (1,2) collides, whatever
        // the third facility does.
        let close = Placement(vec![sq(1, 1), sq(1, 3), sq(5, 5)]);
        assert_eq!(n.stay_probability(&close), 4.0 / 64.0);
        let total: f64 = n.neighbors(&close).iter().map(|(_, r)| r).sum::<f64>() + n.stay_probability(&close);
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn proposal_frequencies_match_kernel() {
        let n = FacilityProblem::default().neighborhood();
        let x = Placement(vec![sq(1, 1), sq(1, 3), sq(5, 5)]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let trials = 128_000;
        let mut counts: HashMap<Placement, u32> = HashMap::new();
        for _ in 0..trials {
            *counts.entry(n.propose(&x, &mut rng).unwrap()).or_default() += 1;
        }
        let stay = counts.get(&x).copied().unwrap_or(0) as f64 / trials as f64;
        assert!((stay - n.stay_probability(&x)).abs() < 0.006);
        for (z, r) in n.neighbors(&x) {
            let f = counts.get(&z).copied().unwrap_or(0) as f64 / trials as f64;
            assert!((f - r).abs() < 5.0 * (r * (1.0 - r) / trials as f64).sqrt(), "{z}");
        }
    }
}
