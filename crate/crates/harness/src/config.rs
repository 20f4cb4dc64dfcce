//! Experiment configuration: per-problem defaults, an optional TOML file of
//! flat keys, and command-line overrides, applied in that order.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use stochastic_ruler::schedule::{AcceptanceRule, TestSchedule};
use stochastic_ruler::search::TerminationPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemId {
    Example1,
    Example2,
    Calibrator,
    Facility,
}

impl ProblemId {
    pub const ALL: [ProblemId; 4] = [
        ProblemId::Example1,
        ProblemId::Example2,
        ProblemId::Calibrator,
        ProblemId::Facility,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ProblemId::Example1 => "example1",
            ProblemId::Example2 => "example2",
            ProblemId::Calibrator => "calibrator",
            ProblemId::Facility => "facility",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            ProblemId::Example1 => "10 states, uniform noise, complete neighborhood; stop at the optimum x = 9",
            ProblemId::Example2 => "100 states on a ring, +-5 neighborhood; stop at the optimum x = 46",
            ProblemId::Calibrator => "six assay calibrators, Monte Carlo measurement uncertainty; min-decrease within 60 iterations",
            ProblemId::Facility => "three facilities on a 6 x 6 grid, normal demand; min-decrease within 150 iterations",
        }
    }

    /// Whether runs stop at a known optimum rather than on a minimum
    /// decrease.
    pub fn has_known_optimum(&self) -> bool {
        matches!(self, ProblemId::Example1 | ProblemId::Example2)
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemId {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        ProblemId::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .with_context(|| format!("unknown problem `{s}` (expected example1, example2, calibrator or facility)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantSelection {
    Original,
    Relaxed,
    Both,
}

impl FromStr for VariantSelection {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        match s {
            "original" => Ok(VariantSelection::Original),
            "relaxed" => Ok(VariantSelection::Relaxed),
            "both" => Ok(VariantSelection::Both),
            _ => bail!("unknown variant `{s}` (expected original, relaxed or both)"),
        }
    }
}

/// A scalar or a list in the config file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn into_vec(self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

/// Keys accepted in a TOML config file; all optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub problem: Option<String>,
    pub variant: Option<String>,
    pub alpha: Option<OneOrMany>,
    pub reps: Option<u32>,
    pub seed: Option<u64>,
    pub budget: Option<u64>,
    pub min_decrease: Option<OneOrMany>,
    pub schedule: Option<String>,
    pub out: Option<String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

pub const DEFAULT_SEED: u64 = 20_190_417;

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub problem: ProblemId,
    pub variant: VariantSelection,
    /// Relaxation levels; ignored by the original rule.
    pub alphas: Vec<f64>,
    pub schedule: TestSchedule,
    pub replications: u32,
    pub seed: u64,
    /// Iteration budget, or the safety cap for known-optimum problems.
    pub budget: u64,
    /// Minimum-decrease levels; empty for known-optimum problems.
    pub min_decrease: Vec<f64>,
}

/// One (acceptance rule, minimum decrease) combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub rule: AcceptanceRule,
    pub min_decrease: Option<f64>,
}

impl ExperimentConfig {
    /// Default experiment design for each problem.
    pub fn defaults(problem: ProblemId) -> Self {
        let base = ExperimentConfig {
            problem,
            variant: VariantSelection::Both,
            alphas: vec![0.75],
            schedule: TestSchedule::default(),
            replications: 100,
            seed: DEFAULT_SEED,
            budget: 0,
            min_decrease: Vec::new(),
        };
        match problem {
            ProblemId::Example1 => ExperimentConfig { replications: 500, budget: 10_000, ..base },
            ProblemId::Example2 => ExperimentConfig {
                alphas: vec![0.75, 0.70, 0.65, 0.60],
                budget: 10_000_000,
                ..base
            },
            ProblemId::Calibrator => ExperimentConfig {
                budget: 60,
                min_decrease: vec![0.05, 0.075, 0.10, 0.125],
                ..base
            },
            ProblemId::Facility => ExperimentConfig {
                budget: 150,
                min_decrease: vec![0.05, 0.10, 0.15, 0.25, 0.50],
                ..base
            },
        }
    }

    /// Applies the keys present in `file`, except `problem` and `out`.
    pub fn apply(&mut self, file: &ConfigFile) -> anyhow::Result<()> {
        if let Some(v) = &file.variant {
            self.variant = v.parse()?;
        }
        if let Some(a) = &file.alpha {
            self.alphas = a.clone().into_vec();
        }
        if let Some(r) = file.reps {
            self.replications = r;
        }
        if let Some(s) = file.seed {
            self.seed = s;
        }
        if let Some(b) = file.budget {
            self.budget = b;
        }
        if let Some(m) = &file.min_decrease {
            self.min_decrease = m.clone().into_vec();
        }
        if let Some(s) = &file.schedule {
            self.schedule = TestSchedule::parse(s)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.schedule.validate()?;
        if self.replications == 0 {
            bail!("replication count must be at least 1");
        }
        if self.budget == 0 {
            bail!("budget must be at least 1");
        }
        if self.variant != VariantSelection::Original && self.alphas.is_empty() {
            bail!("the relaxed rule needs at least one alpha");
        }
        for &a in &self.alphas {
            AcceptanceRule::relaxed(a)?;
        }
        if self.problem.has_known_optimum() {
            if !self.min_decrease.is_empty() {
                bail!("{} stops at its known optimum; --min-decrease does not apply", self.problem);
            }
        } else if self.min_decrease.is_empty() {
            bail!("{} needs at least one minimum-decrease level", self.problem);
        }
        for &m in &self.min_decrease {
            TerminationPolicy::MinDecrease { fraction: m, max_iterations: self.budget }.validate()?;
        }
        Ok(())
    }

    pub fn rules(&self) -> Vec<AcceptanceRule> {
        let mut rules = Vec::new();
        if self.variant != VariantSelection::Relaxed {
            rules.push(AcceptanceRule::Original);
        }
        if self.variant != VariantSelection::Original {
            rules.extend(self.alphas.iter().map(|&alpha| AcceptanceRule::Relaxed { alpha }));
        }
        rules
    }

    pub fn levels(&self) -> Vec<Option<f64>> {
        if self.min_decrease.is_empty() {
            vec![None]
        } else {
            self.min_decrease.iter().copied().map(Some).collect()
        }
    }

    /// Cells in output order: by level, then original before relaxed.
    pub fn cells(&self) -> Vec<Cell> {
        self.levels()
            .into_iter()
            .flat_map(|min_decrease| self.rules().into_iter().map(move |rule| Cell { rule, min_decrease }))
            .collect()
    }

    pub fn termination(&self, cell: &Cell) -> TerminationPolicy {
        match cell.min_decrease {
            Some(fraction) => TerminationPolicy::MinDecrease { fraction, max_iterations: self.budget },
            None => TerminationPolicy::KnownOptimumHit { max_iterations: self.budget },
        }
    }
}
