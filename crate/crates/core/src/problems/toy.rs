//! One-dimensional test problems with known objective: `H(x)` is uniform on
//! `f(x) +/- 0.5` over the states `1..=n`.

use rand::Rng;

use crate::analysis::win::DistributionSpec;
use crate::error::{Error, Result};
use crate::problem::{draw_weighted, EnumerableNeighborhood, Neighborhood, SimulationProblem};
use crate::ruler::RulerConfig;

pub const NOISE_HALF_WIDTH: f64 = 0.5;

pub const EXAMPLE1_F: [f64; 10] = [0.3, 0.7, 0.9, 0.5, 1.0, 1.4, 0.7, 0.8, 0.0, 0.6];

const EXAMPLE2_DATA: &str = include_str!("../../data/example2_f.csv");

#[derive(Debug, Clone, PartialEq)]
pub struct ToyObjective {
    name: String,
    f: Vec<f64>,
    half_width: f64,
    ruler: RulerConfig,
}

impl ToyObjective {
    pub fn new(f: Vec<f64>, ruler: RulerConfig) -> Result<Self> {
        Self::named("toy", f, ruler)
    }

    fn named(name: &str, f: Vec<f64>, ruler: RulerConfig) -> Result<Self> {
        if f.is_empty() || f.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("objective table must be non-empty and finite".into()));
        }
        Ok(ToyObjective {
            name: name.to_string(),
            f,
            half_width: NOISE_HALF_WIDTH,
            ruler,
        })
    }

    /// Ten states, global minimum at 9, ruler `theta(-0.5, 1.9)`.
    pub fn example1() -> Self {
        let ruler = RulerConfig::new(-0.5, 1.9).expect("valid ruler");
        Self::named("example1", EXAMPLE1_F.to_vec(), ruler).expect("valid table")
    }

    /// A hundred states, unique global minimum at 46, ruler `theta(-0.5, 2.7)`.
    pub fn example2() -> Self {
        let ruler = RulerConfig::new(-0.5, 2.7).expect("valid ruler");
        Self::named("example2", parse_table(EXAMPLE2_DATA).expect("bundled table"), ruler)
            .expect("valid table")
    }

    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }

    pub fn states(&self) -> impl Iterator<Item = u32> {
        1..=self.f.len() as u32
    }

    pub fn f(&self, x: u32) -> Result<f64> {
        (x as usize)
            .checked_sub(1)
            .and_then(|i| self.f.get(i))
            .copied()
            .ok_or_else(|| Error::Infeasible(x.to_string()))
    }

    pub fn table(&self) -> &[f64] {
        &self.f
    }

    /// The law of `H(x)`.
    pub fn distribution(&self, x: u32) -> Result<DistributionSpec> {
        let f = self.f(x)?;
        Ok(DistributionSpec::Uniform {
            lo: f - self.half_width,
            hi: f + self.half_width,
        })
    }

    /// One draw of `H(x)`, uniform on `[f(x) - 0.5, f(x) + 0.5]`.
    pub fn toy_sample<R: Rng + ?Sized>(&self, x: u32, rng: &mut R) -> Result<f64> {
        let f = self.f(x)?;
        Ok(f - self.half_width + 2.0 * self.half_width * rng.random::<f64>())
    }
}

/// Parses `x,f` rows (header and `#` comments allowed) into a table indexed
/// from state 1.
pub fn parse_table(text: &str) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut values = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let x: usize = row[0]
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad state id `{}`", &row[0])))?;
        if x != i + 1 {
            return Err(Error::InvalidConfig(format!("state {x} out of order")));
        }
        let f: f64 = row[1]
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad value `{}`", &row[1])))?;
        values.push(f);
    }
    Ok(values)
}

impl SimulationProblem for ToyObjective {
    type Solution = u32;

    fn name(&self) -> &str {
        &self.name
    }

    fn is_feasible(&self, x: &u32) -> bool {
        (1..=self.f.len() as u32).contains(x)
    }

    fn sample<R: Rng + ?Sized>(&self, x: &u32, rng: &mut R) -> Result<f64> {
        self.toy_sample(*x, rng)
    }

    fn default_ruler(&self) -> RulerConfig {
        self.ruler
    }

    fn exact_mean(&self, x: &u32) -> Option<f64> {
        self.f(*x).ok()
    }

    fn known_optima(&self) -> Option<Vec<u32>> {
        let best = self.f.iter().copied().fold(f64::INFINITY, f64::min);
        Some(self.states().filter(|&x| self.f[x as usize - 1] == best).collect())
    }
}

/// `N(x) = S - {x}` with uniform `R(x, x') = 1 / (n - 1)`.
#[derive(Debug, Clone, Copy)]
pub struct CompleteNeighborhood {
    size: u32,
}

impl CompleteNeighborhood {
    pub fn new(size: u32) -> Self {
        CompleteNeighborhood { size }
    }
}

impl Neighborhood<u32> for CompleteNeighborhood {
    fn propose<R: Rng + ?Sized>(&self, x: &u32, rng: &mut R) -> Result<u32> {
        if !(1..=self.size).contains(x) {
            return Err(Error::Infeasible(x.to_string()));
        }
        if self.size < 2 {
            return Err(Error::EmptyNeighborhood(x.to_string()));
        }
        let z = rng.random_range(1..self.size);
        Ok(if z >= *x { z + 1 } else { z })
    }
}

impl EnumerableNeighborhood<u32> for CompleteNeighborhood {
    fn states(&self) -> Vec<u32> {
        (1..=self.size).collect()
    }

    fn neighbors(&self, x: &u32) -> Vec<(u32, f64)> {
        let r = 1.0 / f64::from(self.size - 1);
        (1..=self.size).filter(|z| z != x).map(|z| (z, r)).collect()
    }
}

/// `N(x) = {x - radius, .., x - 1, x + 1, .., x + radius}` on a ring of
/// `size` states, wrapping past either end; `R` is uniform.
#[derive(Debug, Clone, Copy)]
pub struct RingNeighborhood {
    size: u32,
    radius: u32,
}

impl RingNeighborhood {
    pub fn new(size: u32, radius: u32) -> Result<Self> {
        if radius == 0 || 2 * radius >= size {
            return Err(Error::InvalidConfig(format!(
                "ring radius {radius} invalid for {size} states"
            )));
        }
        Ok(RingNeighborhood { size, radius })
    }

    /// The neighborhood used with example 2.
    pub fn example2() -> Self {
        RingNeighborhood { size: 100, radius: 5 }
    }

    fn wrap(&self, v: i64) -> u32 {
        (v - 1).rem_euclid(i64::from(self.size)) as u32 + 1
    }

    /// `N(x)` in ascending offset order.
    pub fn members(&self, x: u32) -> Vec<u32> {
        let r = i64::from(self.radius);
        (-r..=r)
            .filter(|&d| d != 0)
            .map(|d| self.wrap(i64::from(x) + d))
            .collect()
    }
}

/// The example-2 neighbor set of `x`.
pub fn example2_neighbors(x: u32) -> Vec<u32> {
    RingNeighborhood::example2().members(x)
}

impl Neighborhood<u32> for RingNeighborhood {
    fn propose<R: Rng + ?Sized>(&self, x: &u32, rng: &mut R) -> Result<u32> {
        if !(1..=self.size).contains(x) {
            return Err(Error::Infeasible(x.to_string()));
        }
        let items: Vec<(u32, f64)> = self.neighbors(x);
        draw_weighted(&items, rng).ok_or_else(|| Error::EmptyNeighborhood(x.to_string()))
    }
}

impl EnumerableNeighborhood<u32> for RingNeighborhood {
    fn states(&self) -> Vec<u32> {
        (1..=self.size).collect()
    }

    fn neighbors(&self, x: &u32) -> Vec<(u32, f64)> {
        let r = 1.0 / f64::from(2 * self.radius);
        self.members(*x).into_iter().map(|z| (z, r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};
    use std::collections::HashMap;

    #[test]
    fn example1_table_and_ruler() {
        let toy = ToyObjective::example1();
        assert_eq!(toy.table(), &EXAMPLE1_F);
        assert_eq!((toy.default_ruler().a(), toy.default_ruler().b()), (-0.5, 1.9));
        assert_eq!(toy.known_optima(), Some(vec![9]));
    }

    #[test]
    fn example2_table_shape() {
        let toy = ToyObjective::example2();
        assert_eq!(toy.len(), 100);
        assert_eq!(toy.known_optima(), Some(vec![46]));
        assert_eq!(toy.f(46).unwrap(), 0.0);
        let max = toy.table().iter().copied().fold(f64::MIN, f64::max);
        assert!((max - 2.2).abs() < 1e-12);
        assert_eq!((toy.default_ruler().a(), toy.default_ruler().b()), (-0.5, 2.7));
        assert_eq!(&toy.table()[..3], &[0.3, 0.7, 0.9]);
        assert_eq!(&toy.table()[98..], &[1.9, 1.4]);
    }

    fn sample_stats(toy: &ToyObjective, x: u32, n: usize) -> (f64, f64, f64) {
        let mut rng = stream(x as u64, Purpose::Simulation);
        let (mut sum, mut lo, mut hi) = (0.0, f64::MAX, f64::MIN);
        for _ in 0..n {
            let h = toy.toy_sample(x, &mut rng).unwrap();
            sum += h;
            lo = lo.min(h);
            hi = hi.max(h);
        }
        (sum / n as f64, lo, hi)
    }

    #[test]
    fn samples_are_uniform_around_f() {
        let toy = ToyObjective::example1();
        let n = 1_000_000;
        let se = 1.0 / 12f64.sqrt() / (n as f64).sqrt();
        for x in [9, 6] {
            let f = toy.f(x).unwrap();
            let (mean, lo, hi) = sample_stats(&toy, x, n);
            assert!((mean - f).abs() < 3.0 * se, "x = {x}: mean {mean}");
            assert!(lo >= f - 0.5 && hi <= f + 0.5);
        }
    }

    #[test]
    fn out_of_range_state_rejected() {
        let toy = ToyObjective::example1();
        let mut rng = stream(1, Purpose::Simulation);
        assert!(toy.toy_sample(0, &mut rng).is_err());
        assert!(toy.toy_sample(11, &mut rng).is_err());
    }

    #[test]
    fn example2_neighbor_listings() {
        assert_eq!(example2_neighbors(3), vec![98, 99, 100, 1, 2, 4, 5, 6, 7, 8]);
        assert_eq!(example2_neighbors(98), vec![93, 94, 95, 96, 97, 99, 100, 1, 2, 3]);
        assert_eq!(example2_neighbors(43), vec![38, 39, 40, 41, 42, 44, 45, 46, 47, 48]);
        assert!(example2_neighbors(3).contains(&98) && example2_neighbors(98).contains(&3));
    }

    #[test]
    fn wraparound_stays_in_range_and_close() {
        for x in 1..=100u32 {
            let n = example2_neighbors(x);
            assert_eq!(n.len(), 10);
            for z in n {
                assert!((1..=100).contains(&z));
                let d = (i64::from(z) - i64::from(x)).rem_euclid(100);
                assert!(d.min(100 - d) <= 5 && d != 0);
            }
        }
    }

    fn frequencies<N: Neighborhood<u32>>(n: &N, x: u32, draws: usize) -> HashMap<u32, f64> {
        let mut rng = stream(77, Purpose::Proposal);
        let mut counts = HashMap::new();
        for _ in 0..draws {
            *counts.entry(n.propose(&x, &mut rng).unwrap()).or_insert(0usize) += 1;
        }
        counts.into_iter().map(|(k, c)| (k, c as f64 / draws as f64)).collect()
    }

    #[test]
    fn ring_proposals_follow_r() {
        let draws = 200_000;
        let freq = frequencies(&RingNeighborhood::example2(), 43, draws);
        let mut keys: Vec<u32> = freq.keys().copied().collect();
        keys.sort_unstable();
        assert_eq!(keys, vec![38, 39, 40, 41, 42, 44, 45, 46, 47, 48]);
        let se = (0.1f64 * 0.9 / draws as f64).sqrt();
        assert!(freq.values().all(|f| (f - 0.1).abs() < 4.0 * se));
        let freq = frequencies(&RingNeighborhood::example2(), 3, draws);
        assert!(freq.contains_key(&98) && freq.contains_key(&100) && !freq.contains_key(&3));
    }

    #[test]
    fn complete_proposals_are_uniform_over_others() {
        let draws = 180_000;
        let freq = frequencies(&CompleteNeighborhood::new(10), 4, draws);
        assert_eq!(freq.len(), 9);
        assert!(!freq.contains_key(&4));
        let p = 1.0 / 9.0;
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        assert!(freq.values().all(|f| (f - p).abs() < 4.0 * se));
    }

    #[test]
    fn two_state_space_always_proposes_the_other() {
        let n = CompleteNeighborhood::new(2);
        let mut rng = stream(1, Purpose::Proposal);
        assert!((0..100).all(|_| n.propose(&1, &mut rng).unwrap() == 2));
        assert!(matches!(
            CompleteNeighborhood::new(1).propose(&1, &mut rng),
            Err(Error::EmptyNeighborhood(_))
        ));
    }

    #[test]
    fn table_parser_rejects_gaps() {
        assert!(parse_table("x,f\n1,0.5\n3,0.2\n").is_err());
        assert_eq!(parse_table("# c\nx,f\n1,0.5\n2,0.25\n").unwrap(), vec![0.5, 0.25]);
    }
}
