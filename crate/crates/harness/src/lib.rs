//! Benchmark harness: runs the default experiment designs on the four
//! benchmark problems, writes per-replication and aggregate CSV files, and
//! produces a JSON report of exact theory checks.

pub mod config;
pub mod report;
pub mod runner;
pub mod verify;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use config::ExperimentConfig;
use report::{aggregate, write_aggregate_csv, write_runs_csv, AggregateRow};
use runner::{run_experiment, RunRow};

/// Results of one experiment, with the files they were written to.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub rows: Vec<RunRow>,
    pub aggregate: Vec<AggregateRow>,
    pub runs_csv: PathBuf,
    pub aggregate_csv: PathBuf,
}

/// Runs `cfg` and writes `runs.csv`, `aggregate.csv` and `config.json` into
/// `dir`.
pub fn run_and_write(cfg: &ExperimentConfig, dir: &Path) -> anyhow::Result<ExperimentOutput> {
    fs::create_dir_all(dir)?;
    let rows = run_experiment(cfg)?;
    let agg = aggregate(&rows);
    let runs_csv = dir.join("runs.csv");
    let aggregate_csv = dir.join("aggregate.csv");
    write_runs_csv(&rows, BufWriter::new(File::create(&runs_csv)?))?;
    write_aggregate_csv(cfg.problem.as_str(), &agg, BufWriter::new(File::create(&aggregate_csv)?))?;
    serde_json::to_writer_pretty(BufWriter::new(File::create(dir.join("config.json"))?), cfg)?;
    Ok(ExperimentOutput { config: cfg.clone(), rows, aggregate: agg, runs_csv, aggregate_csv })
}

/// Runs the default design of every problem under `seed`, each into its own
/// subdirectory of `out`.
pub fn run_suite(seed: u64, out: &Path) -> anyhow::Result<Vec<ExperimentOutput>> {
    config::ProblemId::ALL
        .iter()
        .map(|&p| {
            let mut cfg = ExperimentConfig::defaults(p);
            cfg.seed = seed;
            run_and_write(&cfg, &out.join(p.as_str()))
        })
        .collect()
}
