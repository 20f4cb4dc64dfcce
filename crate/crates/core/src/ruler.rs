use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The stochastic ruler: a uniform random variable on `[a, b]` against which
/// simulation observations are compared.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RulerConfig {
    a: f64,
    b: f64,
}

impl RulerConfig {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidConfig(format!(
                "ruler bounds must satisfy a < b, got a = {a}, b = {b}"
            )));
        }
        Ok(RulerConfig { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    /// One ruler realization.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.a + (self.b - self.a) * rng.random::<f64>()
    }

    /// Probability that a fixed observation `h` passes a single test,
    /// `Pr(h <= theta)`.
    pub fn pass_probability(&self, h: f64) -> f64 {
        ((self.b - h) / (self.b - self.a)).clamp(0.0, 1.0)
    }

    pub fn covers(&self, h: f64) -> bool {
        self.a <= h && h <= self.b
    }
}

/// Tracks observations that fall outside the ruler range. Observations out
/// of `[a, b]` mean the ruler does not cover the range of `H(x)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CoverageDiagnostic {
    pub observations: u64,
    pub below: u64,
    pub above: u64,
    pub min_seen: Option<f64>,
    pub max_seen: Option<f64>,
}

impl CoverageDiagnostic {
    pub fn record(&mut self, ruler: &RulerConfig, h: f64) {
        self.observations += 1;
        if h < ruler.a() {
            self.below += 1;
        } else if h > ruler.b() {
            self.above += 1;
        }
        self.min_seen = Some(self.min_seen.map_or(h, |m| m.min(h)));
        self.max_seen = Some(self.max_seen.map_or(h, |m| m.max(h)));
    }

    pub fn merge(&mut self, other: &CoverageDiagnostic) {
        self.observations += other.observations;
        self.below += other.below;
        self.above += other.above;
        self.min_seen = match (self.min_seen, other.min_seen) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        self.max_seen = match (self.max_seen, other.max_seen) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
    }

    pub fn is_covered(&self) -> bool {
        self.below == 0 && self.above == 0
    }
}
