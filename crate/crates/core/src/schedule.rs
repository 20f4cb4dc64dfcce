use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack used when rounding `alpha * M` up, so that e.g. `0.9 * 10` gives 9
/// rather than 10 after binary rounding.
const CEIL_SLACK: f64 = 1e-9;

/// How many ruler tests a candidate is allotted at iteration `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestSchedule {
    /// `M_k = m` for every `k`. The resulting chain is stationary.
    Constant { m: u32 },
    /// `M_k = max(1, ceil(scale * log2(k + 2)))`.
    Logarithmic { scale: f64 },
    /// `M_k = start + floor(k / every)`.
    Linear { start: u32, every: u64 },
}

impl Default for TestSchedule {
    fn default() -> Self {
        TestSchedule::Logarithmic { scale: 1.0 }
    }
}

impl TestSchedule {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            TestSchedule::Constant { m } => m >= 1,
            TestSchedule::Logarithmic { scale } => scale.is_finite() && scale > 0.0,
            TestSchedule::Linear { start, every } => start >= 1 && every >= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid test schedule {self:?}")))
        }
    }

    /// Number of tests `M_k` for iteration `k` (0-based).
    pub fn tests_at(&self, k: u64) -> u32 {
        match *self {
            TestSchedule::Constant { m } => m,
            TestSchedule::Logarithmic { scale } if scale == 1.0 => {
                // ceil(log2(k + 2)) == bit length of k + 1
                (u64::BITS - (k + 1).leading_zeros()).max(1)
            }
            TestSchedule::Logarithmic { scale } => {
                let v = scale * ((k + 2) as f64).log2();
                ((v - CEIL_SLACK).ceil() as u32).max(1)
            }
            TestSchedule::Linear { start, every } => {
                start.saturating_add(u32::try_from(k / every).unwrap_or(u32::MAX))
            }
        }
    }

    /// Parses the compact text form used by config files and the CLI:
    /// `const:5`, `log2`, `log2:1.5`, `linear:1:50`.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("unrecognised schedule `{text}`"));
        let parts: Vec<&str> = text.trim().split(':').collect();
        let schedule = match parts.as_slice() {
            ["const", m] | ["constant", m] => TestSchedule::Constant {
                m: m.parse().map_err(|_| bad())?,
            },
            ["log2"] => TestSchedule::default(),
            ["log2", s] => TestSchedule::Logarithmic {
                scale: s.parse().map_err(|_| bad())?,
            },
            ["linear", start, every] => TestSchedule::Linear {
                start: start.parse().map_err(|_| bad())?,
                every: every.parse().map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        schedule.validate()?;
        Ok(schedule)
    }

    pub fn label(&self) -> String {
        match *self {
            TestSchedule::Constant { m } => format!("const:{m}"),
            TestSchedule::Logarithmic { scale } if scale == 1.0 => "log2".to_string(),
            TestSchedule::Logarithmic { scale } => format!("log2:{scale}"),
            TestSchedule::Linear { start, every } => format!("linear:{start}:{every}"),
        }
    }
}

/// Which acceptance rule evaluates candidates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum AcceptanceRule {
    /// Accept only after all `M_k` tests succeed.
    Original,
    /// Accept once `ceil(alpha * M_k)` tests succeed.
    Relaxed { alpha: f64 },
}

impl AcceptanceRule {
    pub fn relaxed(alpha: f64) -> Result<Self> {
        validate_alpha(alpha)?;
        Ok(AcceptanceRule::Relaxed { alpha })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            AcceptanceRule::Original => Ok(()),
            AcceptanceRule::Relaxed { alpha } => validate_alpha(alpha),
        }
    }

    /// Successes needed for acceptance with `m` tests allotted.
    pub fn required_successes(&self, m: u32) -> u32 {
        match *self {
            AcceptanceRule::Original => m,
            AcceptanceRule::Relaxed { alpha } => success_threshold(alpha, m),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AcceptanceRule::Original => "original",
            AcceptanceRule::Relaxed { .. } => "relaxed",
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match *self {
            AcceptanceRule::Original => None,
            AcceptanceRule::Relaxed { alpha } => Some(alpha),
        }
    }
}

fn validate_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// `n = ceil(alpha * m)`, clamped to `1..=m`.
pub fn success_threshold(alpha: f64, m: u32) -> u32 {
    let n = (alpha * f64::from(m) - CEIL_SLACK).ceil();
    (n.max(1.0) as u32).min(m.max(1))
}
