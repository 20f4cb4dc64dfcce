//! Candidate acceptance probabilities and expected test counts.
//!
//! Under the relaxed rule with `n` required successes out of `M` tests, a
//! candidate with single-test win probability `P` is accepted after exactly
//! `t` tests (`n <= t <= M`) with probability
//! `C(t-1, t-n) P^n (1-P)^(t-n)`: the `t`-th test is the `n`-th success.

use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::schedule::{success_threshold, AcceptanceRule};

/// Largest `M` accepted by [`brute_force_acceptance`].
pub const ENUMERATION_LIMIT: u32 = 20;

/// Binomial coefficients are exact integers up to this `t - 1`; above it
/// they are evaluated in log space.
const EXACT_BINOMIAL_LIMIT: u64 = 30;

fn binomial_exact(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// `ln(C(t-1, t-n) P^n (1-P)^(t-n))` for `0 < P < 1`.
fn ln_term(ln_p: f64, ln_q: f64, t: u32, n: u32) -> f64 {
    let (t, n) = (u64::from(t), u64::from(n));
    let ln_c = if t - 1 <= EXACT_BINOMIAL_LIMIT {
        (binomial_exact(t - 1, t - n) as f64).ln()
    } else {
        ln_binomial(t - 1, t - n)
    };
    ln_c + n as f64 * ln_p + (t - n) as f64 * ln_q
}

/// `C(t-1, t-n) P^n (1-P)^(t-n)`.
fn term(p: f64, t: u32, n: u32) -> f64 {
    if t - 1 <= EXACT_BINOMIAL_LIMIT as u32 {
        binomial_exact(u64::from(t - 1), u64::from(t - n)) as f64
            * p.powi(n as i32)
            * (1.0 - p).powi((t - n) as i32)
    } else if p <= 0.0 {
        0.0
    } else if p >= 1.0 {
        if t == n {
            1.0
        } else {
            0.0
        }
    } else {
        ln_term(p.ln(), (1.0 - p).ln(), t, n).exp()
    }
}

fn check_counts(m: u32, n: u32) {
    assert!(m >= 1 && (1..=m).contains(&n), "need 1 <= n <= M, got n = {n}, M = {m}");
}

/// Probability of acceptance with `n` required successes out of `m` tests.
pub fn relaxed_acceptance(p: f64, m: u32, n: u32) -> f64 {
    check_counts(m, n);
    (n..=m).map(|t| term(p, t, n)).sum::<f64>().clamp(0.0, 1.0)
}

/// Natural log of [`relaxed_acceptance`], accurate when the probability
/// underflows. Returns `-inf` when `p == 0`.
pub fn ln_relaxed_acceptance(p: f64, m: u32, n: u32) -> f64 {
    check_counts(m, n);
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return 0.0;
    }
    let (ln_p, ln_q) = (p.ln(), (1.0 - p).ln());
    let terms: Vec<f64> = (n..=m).map(|t| ln_term(ln_p, ln_q, t, n)).collect();
    log_sum_exp(&terms).min(0.0)
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Probability that a candidate with win probability `p` is accepted when
/// `m` tests are allotted.
pub fn acceptance_probability(p: f64, m: u32, rule: &AcceptanceRule) -> f64 {
    match rule {
        AcceptanceRule::Original => p.powi(m as i32),
        AcceptanceRule::Relaxed { alpha } => relaxed_acceptance(p, m, success_threshold(*alpha, m)),
    }
}

pub fn ln_acceptance_probability(p: f64, m: u32, rule: &AcceptanceRule) -> f64 {
    match rule {
        AcceptanceRule::Original => f64::from(m) * p.ln(),
        AcceptanceRule::Relaxed { alpha } => {
            ln_relaxed_acceptance(p, m, success_threshold(*alpha, m))
        }
    }
}

/// Acceptance probability by enumerating every success/failure sequence
/// the relaxed stopping rule can produce. Independent of the closed form.
pub fn brute_force_acceptance(p: f64, m: u32, n: u32) -> Result<f64> {
    if m > ENUMERATION_LIMIT {
        return Err(Error::EnumerationBound {
            max: ENUMERATION_LIMIT,
            got: m,
        });
    }
    check_counts(m, n);
    let failure_limit = m - n + 1;

    fn walk(p: f64, prob: f64, successes: u32, failures: u32, n: u32, fail_limit: u32) -> f64 {
        if successes == n {
            return prob;
        }
        if failures == fail_limit {
            return 0.0;
        }
        walk(p, prob * p, successes + 1, failures, n, fail_limit)
            + walk(p, prob * (1.0 - p), successes, failures + 1, n, fail_limit)
    }
    Ok(walk(p, 1.0, 0, 0, n, failure_limit))
}

/// Expected number of tests run on a candidate, given that it is accepted
/// under the relaxed rule; `s = 1 - P` is the single-test failure
/// probability and `n = ceil(alpha * m)`.
pub fn expected_tests_given_accept(s: f64, alpha: f64, m: u32) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) || !(alpha > 0.0 && alpha < 1.0) || m == 0 {
        return Err(Error::InvalidConfig(format!(
            "need 0 <= s <= 1, 0 < alpha < 1, M >= 1; got s = {s}, alpha = {alpha}, M = {m}"
        )));
    }
    if s >= 1.0 {
        return Err(Error::AcceptanceImpossible);
    }
    let n = success_threshold(alpha, m);
    // The common factor P^n cancels in the ratio.
    let (mut weighted, mut total) = (0.0, 0.0);
    for t in n..=m {
        let w = if t == n {
            1.0
        } else if u64::from(t - 1) <= EXACT_BINOMIAL_LIMIT {
            binomial_exact(u64::from(t - 1), u64::from(t - n)) as f64 * s.powi((t - n) as i32)
        } else {
            (ln_binomial(u64::from(t - 1), u64::from(t - n)) + f64::from(t - n) * s.ln()).exp()
        };
        weighted += f64::from(t) * w;
        total += w;
    }
    Ok(weighted / total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn original_is_a_power() {
        assert_eq!(acceptance_probability(0.5, 3, &AcceptanceRule::Original), 0.125);
    }

    #[test]
    fn relaxed_m2_n1_by_enumeration() {
        let rule = AcceptanceRule::Relaxed { alpha: 0.5 };
        assert!((acceptance_probability(0.5, 2, &rule) - 0.75).abs() < 1e-15);
        assert!((brute_force_acceptance(0.5, 2, 1).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn certain_and_impossible_success() {
        for m in [1, 5, 40, 200] {
            assert_eq!(acceptance_probability(1.0, m, &AcceptanceRule::Original), 1.0);
            assert_eq!(acceptance_probability(1.0, m, &AcceptanceRule::Relaxed { alpha: 0.6 }), 1.0);
            assert_eq!(acceptance_probability(0.0, m, &AcceptanceRule::Relaxed { alpha: 0.6 }), 0.0);
        }
        for m in [1, 7, 20] {
            for n in 1..=m {
                assert_eq!(brute_force_acceptance(0.0, m, n).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn enumeration_bound_enforced() {
        assert!(matches!(
            brute_force_acceptance(0.5, 21, 3),
            Err(Error::EnumerationBound { max: 20, got: 21 })
        ));
    }

    #[test]
    fn log_space_agrees_with_direct_sum() {
        for &p in &[0.1, 0.37, 0.5, 0.83, 0.99] {
            for m in [1u32, 10, 30, 31, 45, 80] {
                for n in [1, m / 2 + 1, m] {
                    let direct = relaxed_acceptance(p, m, n);
                    let logged = ln_relaxed_acceptance(p, m, n).exp();
                    assert!((direct - logged).abs() <= 1e-12 * direct.max(1e-300) + 1e-300,
                        "p {p} m {m} n {n}: {direct} vs {logged}");
                }
            }
        }
    }

    #[test]
    fn large_m_stays_normalized() {
        // With n = 1 the only rejecting sequence is M straight failures.
        let v = relaxed_acceptance(0.3, 400, 1);
        assert!((v - (1.0 - 0.7f64.powi(400))).abs() < 1e-12);
        let v = relaxed_acceptance(0.6, 300, 150);
        assert!((0.0..=1.0).contains(&v) && v > 0.99);
    }

    #[test]
    fn expected_tests_examples() {
        assert_eq!(expected_tests_given_accept(0.0, 0.75, 10).unwrap(), 8.0);
        assert!((expected_tests_given_accept(0.5, 0.5, 2).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(
            expected_tests_given_accept(1.0, 0.5, 4).unwrap_err(),
            Error::AcceptanceImpossible
        );
    }

    /// Conditional mean of the stopping time by direct enumeration.
    fn enumerated_conditional_mean(p: f64, m: u32, n: u32) -> f64 {
        fn walk(p: f64, prob: f64, s: u32, f: u32, n: u32, lim: u32, acc: &mut (f64, f64)) {
            if s == n {
                acc.0 += prob * f64::from(s + f);
                acc.1 += prob;
                return;
            }
            if f == lim {
                return;
            }
            walk(p, prob * p, s + 1, f, n, lim, acc);
            walk(p, prob * (1.0 - p), s, f + 1, n, lim, acc);
        }
        let mut acc = (0.0, 0.0);
        walk(p, 1.0, 0, 0, n, m - n + 1, &mut acc);
        acc.0 / acc.1
    }

    #[test]
    fn expected_tests_match_enumeration() {
        for &s in &[0.05, 0.3, 0.5, 0.9] {
            for m in [2u32, 5, 9, 14] {
                for &alpha in &[0.2, 0.5, 0.75] {
                    let n = success_threshold(alpha, m);
                    let e = expected_tests_given_accept(s, alpha, m).unwrap();
                    let oracle = enumerated_conditional_mean(1.0 - s, m, n);
                    assert!((e - oracle).abs() < 1e-12, "s {s} m {m} alpha {alpha}");
                }
            }
        }
    }

    #[test]
    fn expected_tests_bound_depends_on_threshold() {
        // strictly below M whenever the rule actually relaxes; equal to M when n = M
        for m in 2..=50u32 {
            for a in 1..=9 {
                let alpha = f64::from(a) / 10.0;
                for si in 1..=19 {
                    let s = f64::from(si) / 20.0;
                    let e = expected_tests_given_accept(s, alpha, m).unwrap();
                    if success_threshold(alpha, m) < m {
                        assert!(e < f64::from(m));
                    } else {
                        assert_eq!(e, f64::from(m));
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn bracket_matches_enumeration(p in 0.0f64..=1.0, m in 1u32..=14, frac in 0.0f64..1.0) {
            let n = 1 + ((frac * f64::from(m)) as u32).min(m - 1);
            let closed = relaxed_acceptance(p, m, n);
            let brute = brute_force_acceptance(p, m, n).unwrap();
            prop_assert!((closed - brute).abs() <= 1e-12);
        }

        #[test]
        fn full_threshold_collapses_to_power(p in 0.0f64..=1.0, m in 1u32..=60) {
            let relaxed = relaxed_acceptance(p, m, m);
            let original = acceptance_probability(p, m, &AcceptanceRule::Original);
            prop_assert!((relaxed - original).abs() <= 1e-14);
        }

        #[test]
        fn monotone_in_threshold_and_p(p in 0.01f64..0.99, dp in 0.0f64..0.2, m in 1u32..=40) {
            for n in 1..m {
                prop_assert!(relaxed_acceptance(p, m, n) + 1e-14 >= relaxed_acceptance(p, m, n + 1));
            }
            let p2 = (p + dp).min(1.0);
            for n in 1..=m {
                prop_assert!(relaxed_acceptance(p2, m, n) + 1e-14 >= relaxed_acceptance(p, m, n));
            }
        }
    }
}
