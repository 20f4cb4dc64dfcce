//! Assay calibrator selection.
//!
//! Six calibrator concentrations `m_1 < ... < m_6` are chosen from the
//! integers of a bounded domain subject to a minimum relative gap between
//! neighbours. One replicate of the objective averages `T` Monte Carlo
//! estimates of the measurement uncertainty `u_s` of a test sample: the
//! calibrators and their readings are perturbed, a quadratic calibration
//! curve is fitted to them, and `N` perturbed readings of the test sample are
//! read back through the fitted curve.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{Neighborhood, SimulationProblem};
use crate::ruler::RulerConfig;

/// Offsets a single calibrator may propose.
pub const OFFSETS: [i64; 4] = [-2, -1, 1, 2];

/// Abscissae are divided by this before fitting, to keep the normal matrix
/// well conditioned.
const FIT_SCALE: f64 = 100.0;

/// A calibrator vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Calibrators(pub Vec<u32>);

impl Calibrators {
    pub fn values(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Calibrators {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join("-"))
    }
}

/// `l(m) = c0 + c1 m + c2 m^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceFunction {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl ReferenceFunction {
    pub fn eval(&self, m: f64) -> f64 {
        self.c0 + m * (self.c1 + m * self.c2)
    }

    pub fn slope(&self, m: f64) -> f64 {
        self.c1 + 2.0 * self.c2 * m
    }

    /// The increasing branch of `l^{-1}`.
    pub fn inverse(&self, c: f64) -> Option<f64> {
        if self.c2 == 0.0 {
            return (self.c1 != 0.0).then(|| (c - self.c0) / self.c1);
        }
        let disc = self.c1 * self.c1 - 4.0 * self.c2 * (self.c0 - c);
        (disc >= 0.0).then(|| (-self.c1 + disc.sqrt()) / (2.0 * self.c2))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratorConfig {
    pub count: usize,
    pub domain_min: u32,
    pub domain_max: u32,
    pub reference: ReferenceFunction,
    /// Standard deviation of every perturbation, as a fraction of its mean.
    pub sd_fraction: f64,
    /// Target concentration `s_t` of the test sample.
    pub test_sample: f64,
    /// `N`: test-sample readings per uncertainty estimate.
    pub measurements: u32,
    /// `T`: uncertainty estimates averaged per objective replicate.
    pub replicates: u32,
    /// Minimum of `(m_{i+1} - m_i) / m_i`.
    pub min_gap: f64,
    pub ruler: RulerConfig,
    /// Redraws allowed for one uncertainty estimate whose fitted curve
    /// cannot be inverted.
    pub max_redraws: u32,
    pub initial: Vec<u32>,
}

impl Default for CalibratorConfig {
    fn default() -> Self {
        CalibratorConfig {
            count: 6,
            domain_min: 10,
            domain_max: 200,
            reference: ReferenceFunction { c0: 5.0, c1: 0.8, c2: 0.002 },
            sd_fraction: 0.05,
            test_sample: 20.0,
            measurements: 100,
            replicates: 10,
            min_gap: 0.1,
            ruler: RulerConfig::new(0.0, 2.0).expect("valid ruler"),
            max_redraws: 1000,
            initial: vec![20, 40, 60, 80, 100, 120],
        }
    }
}

impl CalibratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(format!("calibrator: {msg}")));
        if self.count < 3 {
            return bad("a quadratic fit needs at least 3 calibrators");
        }
        if self.domain_min == 0 || self.domain_min >= self.domain_max {
            return bad("domain must be a non-empty range of positive integers");
        }
        let r = &self.reference;
        if r.slope(self.domain_min as f64) <= 0.0 || r.slope(self.domain_max as f64) <= 0.0 {
            return bad("reference function must be increasing on the domain");
        }
        if r.eval(self.domain_min as f64) <= 0.0 {
            return bad("reference readings must be positive on the domain");
        }
        if !(self.sd_fraction >= 0.0 && self.sd_fraction.is_finite()) {
            return bad("sd fraction must be non-negative");
        }
        if !(self.test_sample > 0.0) {
            return bad("test sample must be positive");
        }
        if self.measurements < 2 || self.replicates == 0 {
            return bad("need N >= 2 and T >= 1");
        }
        if !(self.min_gap >= 0.0) {
            return bad("min gap must be non-negative");
        }
        if !self.is_feasible(&self.initial) {
            return bad("initial calibrators are infeasible");
        }
        Ok(())
    }

    /// Domain bounds and the relative gap constraint.
    pub fn is_feasible(&self, m: &[u32]) -> bool {
        m.len() == self.count
            && m.iter().all(|&v| (self.domain_min..=self.domain_max).contains(&v))
            && m.windows(2).all(|w| {
                let (lo, hi) = (w[0] as f64, w[1] as f64);
                hi - lo >= self.min_gap * lo - 1e-9
            })
    }

    pub fn initial_solution(&self) -> Calibrators {
        Calibrators(self.initial.clone())
    }
}

/// Coefficients of the fitted curve `c = b0 + b1 u + b2 u^2` with
/// `u = m / FIT_SCALE`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct FittedCurve {
    b0: f64,
    b1: f64,
    b2: f64,
}

impl FittedCurve {
    fn fit(m: &[f64], c: &[f64]) -> Option<FittedCurve> {
        let x = DMatrix::from_fn(m.len(), 3, |r, k| (m[r] / FIT_SCALE).powi(k as i32));
        let y = DVector::from_column_slice(c);
        let beta = x.svd(true, true).solve(&y, 1e-12).ok()?;
        let fit = FittedCurve { b0: beta[0], b1: beta[1], b2: beta[2] };
        [fit.b0, fit.b1, fit.b2].iter().all(|v| v.is_finite()).then_some(fit)
    }

    /// The concentration read for `c`: the root of `g'(m) = c` nearest
    /// `guess`, provided the curve is increasing there.
    fn invert(&self, c: f64, guess: f64) -> Option<f64> {
        let g = guess / FIT_SCALE;
        let (a, b, k) = (self.b2, self.b1, self.b0 - c);
        let u = if a.abs() < 1e-12 * b.abs().max(1.0) {
            if b == 0.0 {
                return None;
            }
            -k / b
        } else {
            let disc = b * b - 4.0 * a * k;
            if disc < 0.0 {
                return None;
            }
            // Stable pair of roots.
            let q = -0.5 * (b + b.signum() * disc.sqrt());
            let r1 = q / a;
            let r2 = if q != 0.0 { k / q } else { r1 };
            if (r1 - g).abs() <= (r2 - g).abs() {
                r1
            } else {
                r2
            }
        };
        (u.is_finite() && b + 2.0 * a * u > 0.0).then_some(u * FIT_SCALE)
    }
}

/// One estimate of `u_s` with the number of redraws it needed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub value: f64,
    pub redraws: u32,
}

fn perturb<R: Rng + ?Sized>(mean: f64, fraction: f64, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    mean + fraction * mean * z
}

/// One estimate of the measurement uncertainty `u_s(m)`.
///
/// When the fitted curve has no increasing root for some reading, the whole
/// estimate is drawn again; `redraws` counts how often that happened.
pub fn calibrate_and_measure<R: Rng + ?Sized>(
    cfg: &CalibratorConfig,
    m: &Calibrators,
    rng: &mut R,
) -> Result<Measurement> {
    if !cfg.is_feasible(m.values()) {
        return Err(Error::Infeasible(m.to_string()));
    }
    let l = &cfg.reference;
    let frac = cfg.sd_fraction;
    let c_t = l.eval(cfg.test_sample);
    let n = cfg.measurements as usize;
    let mut reads = Vec::with_capacity(n);
    'attempt: for redraws in 0..=cfg.max_redraws {
        let m_pert: Vec<f64> = m.values().iter().map(|&v| perturb(v as f64, frac, rng)).collect();
        let c_pert: Vec<f64> = m_pert.iter().map(|&v| perturb(l.eval(v), frac, rng)).collect();
        let Some(curve) = FittedCurve::fit(&m_pert, &c_pert) else {
            continue;
        };
        reads.clear();
        for _ in 0..n {
            let c = perturb(c_t, frac, rng);
            let guess = l.inverse(c).unwrap_or(cfg.test_sample);
            match curve.invert(c, guess) {
                Some(s) => reads.push(s),
                None => continue 'attempt,
            }
        }
        return Ok(Measurement { value: sample_sd(&reads), redraws });
    }
    Err(Error::Sampler(format!(
        "no invertible calibration curve for {m} after {} redraws",
        cfg.max_redraws
    )))
}

/// Sample standard deviation, computed on values shifted by the first one so
/// identical readings give exactly zero.
fn sample_sd(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let shift = xs[0];
    let mean = xs.iter().map(|x| x - shift).sum::<f64>() / n;
    (xs.iter().map(|x| (x - shift - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// The calibrator problem; `h(m)` is the mean of `T` estimates of `u_s(m)`.
#[derive(Debug, Clone)]
pub struct CalibratorProblem {
    cfg: CalibratorConfig,
}

impl CalibratorProblem {
    pub fn new(cfg: CalibratorConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(CalibratorProblem { cfg })
    }

    pub fn config(&self) -> &CalibratorConfig {
        &self.cfg
    }

    /// One objective replicate with the redraws it needed.
    pub fn objective_replicate<R: Rng + ?Sized>(&self, m: &Calibrators, rng: &mut R) -> Result<Measurement> {
        let mut total = 0.0;
        let mut redraws = 0;
        for _ in 0..self.cfg.replicates {
            let one = calibrate_and_measure(&self.cfg, m, rng)?;
            total += one.value;
            redraws += one.redraws;
        }
        Ok(Measurement { value: total / self.cfg.replicates as f64, redraws })
    }

    pub fn neighborhood(&self) -> CalibratorNeighborhood {
        CalibratorNeighborhood { cfg: self.cfg.clone() }
    }
}

impl Default for CalibratorProblem {
    fn default() -> Self {
        CalibratorProblem::new(CalibratorConfig::default()).expect("default config is valid")
    }
}

impl SimulationProblem for CalibratorProblem {
    type Solution = Calibrators;

    fn name(&self) -> &str {
        "calibrator"
    }

    fn is_feasible(&self, m: &Calibrators) -> bool {
        self.cfg.is_feasible(m.values())
    }

    fn sample<R: Rng + ?Sized>(&self, m: &Calibrators, rng: &mut R) -> Result<f64> {
        Ok(self.objective_replicate(m, rng)?.value)
    }

    fn default_ruler(&self) -> RulerConfig {
        self.cfg.ruler
    }
}

/// Random-scan neighborhood: the calibrators are visited in a uniformly
/// random order, and each proposes a uniform offset from [`OFFSETS`] that is
/// kept only if the partially updated vector stays feasible. A calibrator
/// whose offset is rejected keeps its value.
#[derive(Debug, Clone)]
pub struct CalibratorNeighborhood {
    cfg: CalibratorConfig,
}

impl CalibratorNeighborhood {
    pub fn new(cfg: CalibratorConfig) -> Self {
        CalibratorNeighborhood { cfg }
    }

    pub fn config(&self) -> &CalibratorConfig {
        &self.cfg
    }

    /// Exact `R(from, to)`, averaging over all visiting orders.
    pub fn transition_probability(&self, from: &Calibrators, to: &Calibrators) -> f64 {
        let n = self.cfg.count;
        if from.len() != n || to.len() != n || !self.cfg.is_feasible(from.values()) {
            return 0.0;
        }
        let delta: Vec<i64> = from.0.iter().zip(&to.0).map(|(&a, &b)| b as i64 - a as i64).collect();
        if delta.iter().any(|d| d.abs() > 2) {
            return 0.0;
        }
        let mut total = 0.0;
        let mut count = 0usize;
        for_each_permutation(n, &mut |order| {
            count += 1;
            total += self.path_probability(from, &delta, order);
        });
        total / count as f64
    }

    fn path_probability(&self, from: &Calibrators, delta: &[i64], order: &[usize]) -> f64 {
        let mut work: Vec<u32> = from.0.clone();
        let mut p = 1.0;
        for &i in order {
            let current = work[i];
            if delta[i] == 0 {
                let mut rejected = 0;
                for d in OFFSETS {
                    if !self.feasible_with(&mut work, i, current as i64 + d) {
                        rejected += 1;
                    }
                    work[i] = current;
                }
                p *= rejected as f64 / 4.0;
            } else {
                let ok = self.feasible_with(&mut work, i, current as i64 + delta[i]);
                if !ok {
                    return 0.0;
                }
                p *= 0.25;
            }
            if p == 0.0 {
                return 0.0;
            }
        }
        p
    }

    /// Sets `work[i] = value` when that keeps `work` feasible; otherwise
    /// leaves `work` unchanged.
    fn feasible_with(&self, work: &mut [u32], i: usize, value: i64) -> bool {
        if value < self.cfg.domain_min as i64 || value > self.cfg.domain_max as i64 {
            return false;
        }
        let old = work[i];
        work[i] = value as u32;
        let ok = self.cfg.is_feasible(work);
        if !ok {
            work[i] = old;
        }
        ok
    }

    /// Every vector within one offset per component, i.e. a superset of the
    /// support of `R(from, .)`.
    pub fn candidates(&self, from: &Calibrators) -> Vec<Calibrators> {
        let n = from.len();
        let mut out = Vec::new();
        let mut digits = vec![0usize; n];
        loop {
            let cand: Option<Vec<u32>> = from
                .0
                .iter()
                .zip(&digits)
                .map(|(&v, &d)| u32::try_from(v as i64 + d as i64 - 2).ok())
                .collect();
            if let Some(c) = cand.filter(|c| self.cfg.is_feasible(c)) {
                out.push(Calibrators(c));
            }
            let mut pos = 0;
            loop {
                if pos == n {
                    return out;
                }
                digits[pos] += 1;
                if digits[pos] < 5 {
                    break;
                }
                digits[pos] = 0;
                pos += 1;
            }
        }
    }
}

impl Neighborhood<Calibrators> for CalibratorNeighborhood {
    fn propose<R: Rng + ?Sized>(&self, m: &Calibrators, rng: &mut R) -> Result<Calibrators> {
        if !self.cfg.is_feasible(m.values()) {
            return Err(Error::Infeasible(m.to_string()));
        }
        let mut order: Vec<usize> = (0..m.len()).collect();
        order.shuffle(rng);
        let mut work = m.0.clone();
        for i in order {
            let d = OFFSETS[rng.random_range(0..OFFSETS.len())];
            let target = work[i] as i64 + d;
            self.feasible_with(&mut work, i, target);
        }
        Ok(Calibrators(work))
    }
}

/// Calls `f` with every permutation of `0..n` (Heap's algorithm).
fn for_each_permutation(n: usize, f: &mut impl FnMut(&[usize])) {
    let mut items: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    f(&items);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(c[i], i);
            }
            f(&items);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}
