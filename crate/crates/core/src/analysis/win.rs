//! Single-test win probabilities `P(x, a, b) = Pr(h(x, Y_x) <= theta(a, b))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ruler::RulerConfig;

/// The law of `H(x)` at one solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DistributionSpec {
    Uniform { lo: f64, hi: f64 },
    Degenerate { value: f64 },
    /// An i.i.d. sample of `H(x)`.
    Empirical { samples: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WinMethod {
    ClosedForm,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WinProbability {
    pub value: f64,
    pub method: WinMethod,
    /// Standard error for Monte Carlo estimates, zero for closed forms.
    pub error_bound: f64,
    /// False when part of the support of `H(x)` lies outside `[a, b]`.
    pub covered: bool,
}

impl WinProbability {
    /// `s = 1 - P`, the single-test failure probability.
    pub fn failure(&self) -> f64 {
        1.0 - self.value
    }
}

/// Antiderivative of `clamp((b - h) / (b - a), 0, 1)` in `h`.
fn pass_antiderivative(ruler: &RulerConfig, h: f64) -> f64 {
    let (a, b) = (ruler.a(), ruler.b());
    let w = b - a;
    if h <= a {
        h - a
    } else if h <= b {
        // integral from a to h of (b - t) / w
        ((b - a).powi(2) - (b - h).powi(2)) / (2.0 * w)
    } else {
        (b - a) / 2.0
    }
}

pub fn win_probability(dist: &DistributionSpec, ruler: &RulerConfig) -> Result<WinProbability> {
    match dist {
        DistributionSpec::Uniform { lo, hi } => {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidConfig(format!("bad uniform support [{lo}, {hi}]")));
            }
            let value = if hi == lo {
                ruler.pass_probability(*lo)
            } else {
                (pass_antiderivative(ruler, *hi) - pass_antiderivative(ruler, *lo)) / (hi - lo)
            };
            Ok(WinProbability {
                value,
                method: WinMethod::ClosedForm,
                error_bound: 0.0,
                covered: ruler.covers(*lo) && ruler.covers(*hi),
            })
        }
        DistributionSpec::Degenerate { value } => Ok(WinProbability {
            value: ruler.pass_probability(*value),
            method: WinMethod::ClosedForm,
            error_bound: 0.0,
            covered: ruler.covers(*value),
        }),
        DistributionSpec::Empirical { samples } => {
            if samples.len() < 2 {
                return Err(Error::InvalidConfig("need at least two samples".into()));
            }
            // Conditioning on h, a test passes with probability clamp((b - h) / w).
            let n = samples.len() as f64;
            let probs: Vec<f64> = samples.iter().map(|&h| ruler.pass_probability(h)).collect();
            let mean = probs.iter().sum::<f64>() / n;
            let var = probs.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1.0);
            Ok(WinProbability {
                value: mean,
                method: WinMethod::MonteCarlo,
                error_bound: (var / n).sqrt(),
                covered: samples.iter().all(|&h| ruler.covers(h)),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    fn ruler() -> RulerConfig {
        RulerConfig::new(-0.5, 1.9).unwrap()
    }

    /// Direct simulation of the test, independent of the closed form.
    fn monte_carlo(lo: f64, hi: f64, r: &RulerConfig, n: usize) -> f64 {
        let mut rng = stream(2024, Purpose::Simulation);
        let wins = (0..n)
            .filter(|_| {
                let h = lo + (hi - lo) * rand::Rng::random::<f64>(&mut rng);
                h <= r.sample(&mut rng)
            })
            .count();
        wins as f64 / n as f64
    }

    #[test]
    fn example1_state_nine() {
        let p = win_probability(&DistributionSpec::Uniform { lo: -0.5, hi: 0.5 }, &ruler()).unwrap();
        assert!((p.value - 19.0 / 24.0).abs() < 1e-15);
        assert!(p.covered);
        let mc = monte_carlo(-0.5, 0.5, &ruler(), 1_000_000);
        assert!((mc - 19.0 / 24.0).abs() < 4.0 * (0.165f64 / 1e6).sqrt());
    }

    #[test]
    fn example1_state_six() {
        let p = win_probability(&DistributionSpec::Uniform { lo: 0.9, hi: 1.9 }, &ruler()).unwrap();
        assert!((p.value - 5.0 / 24.0).abs() < 1e-15);
        let mc = monte_carlo(0.9, 1.9, &ruler(), 1_000_000);
        assert!((mc - 5.0 / 24.0).abs() < 4.0 * (0.165f64 / 1e6).sqrt());
    }

    #[test]
    fn midpoint_is_a_coin_flip() {
        let p = win_probability(&DistributionSpec::Degenerate { value: 0.7 }, &ruler()).unwrap();
        assert!((p.value - 0.5).abs() < 1e-15);
    }

    #[test]
    fn support_outside_ruler_clamps_and_flags() {
        let r = RulerConfig::new(0.0, 1.0).unwrap();
        let p = win_probability(&DistributionSpec::Uniform { lo: -1.0, hi: 2.0 }, &r).unwrap();
        assert!(!p.covered);
        // a third of the mass always passes, a third never does, the rest averages 1/2
        assert!((p.value - 0.5).abs() < 1e-15);
        let mc = monte_carlo(-1.0, 2.0, &r, 1_000_000);
        assert!((mc - p.value).abs() < 0.002);
    }

    #[test]
    fn empirical_estimate_has_standard_error() {
        let mut rng = stream(3, Purpose::Simulation);
        let samples: Vec<f64> = (0..100_000)
            .map(|_| -0.5 + rand::Rng::random::<f64>(&mut rng))
            .collect();
        let p = win_probability(&DistributionSpec::Empirical { samples }, &ruler()).unwrap();
        assert_eq!(p.method, WinMethod::MonteCarlo);
        assert!(p.error_bound > 0.0 && p.error_bound < 1e-3);
        assert!((p.value - 19.0 / 24.0).abs() < 4.0 * p.error_bound);
    }
}
