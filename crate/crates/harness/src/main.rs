use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use sr_harness::config::{ConfigFile, ExperimentConfig, ProblemId, DEFAULT_SEED};
use sr_harness::report::render_aggregate;
use sr_harness::verify::{verify_all, write_report, Status};
use sr_harness::{run_and_write, run_suite};
use stochastic_ruler::schedule::TestSchedule;

#[derive(Parser)]
#[command(name = "sr-bench", version, about = "Stochastic ruler benchmark experiments and theory checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write runs.csv, aggregate.csv and config.json.
    Run(RunArgs),
    /// Run the exact theory checks and write verification.json.
    Verify(VerifyArgs),
    /// List the available problems.
    ListProblems,
}

#[derive(Args)]
struct RunArgs {
    /// TOML file of experiment keys; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// example1, example2, calibrator, facility, or `all` for every default design.
    #[arg(long)]
    problem: Option<String>,
    /// original, relaxed or both.
    #[arg(long)]
    variant: Option<String>,
    /// Relaxation levels, comma separated.
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    #[arg(long)]
    reps: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// Iteration budget (safety cap for known-optimum problems).
    #[arg(long)]
    budget: Option<u64>,
    /// Minimum-decrease levels, comma separated.
    #[arg(long, value_delimiter = ',')]
    min_decrease: Option<Vec<f64>>,
    /// Test schedule: log2, log2:<scale>, const:<M> or linear:<start>:<every>.
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn resolve(args: &RunArgs) -> anyhow::Result<(Option<ExperimentConfig>, u64, PathBuf)> {
    let file = match &args.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let problem = args
        .problem
        .clone()
        .or(file.problem.clone())
        .context("no problem given; use --problem or a config file")?;
    let out = args.out.clone().or(file.out.as_ref().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"));
    let seed = args.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    if problem == "all" {
        return Ok((None, seed, out));
    }
    let mut cfg = ExperimentConfig::defaults(problem.parse()?);
    cfg.apply(&file)?;
    if let Some(v) = &args.variant {
        cfg.variant = v.parse()?;
    }
    if let Some(a) = &args.alpha {
        cfg.alphas = a.clone();
    }
    if let Some(r) = args.reps {
        cfg.replications = r;
    }
    cfg.seed = seed;
    if let Some(b) = args.budget {
        cfg.budget = b;
    }
    if let Some(m) = &args.min_decrease {
        cfg.min_decrease = m.clone();
    }
    if let Some(s) = &args.schedule {
        cfg.schedule = TestSchedule::parse(s)?;
    }
    cfg.validate()?;
    Ok((Some(cfg), seed, out))
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Run(args) => {
            let (cfg, seed, out) = resolve(&args)?;
            let outputs = match cfg {
                Some(cfg) => vec![run_and_write(&cfg, &out)?],
                None => run_suite(seed, &out)?,
            };
            for o in outputs {
                println!("{}", render_aggregate(o.config.problem.as_str(), &o.aggregate));
                println!("wrote {} and {}\n", o.runs_csv.display(), o.aggregate_csv.display());
            }
        }
        Command::Verify(args) => {
            std::fs::create_dir_all(&args.out)?;
            let report = verify_all(args.seed, Some(&args.out))?;
            let mut failed = 0;
            for (name, check) in &report {
                let status = if check.status == Status::Pass { "pass" } else { "FAIL" };
                if check.status == Status::Fail {
                    failed += 1;
                }
                println!("{status:4}  {name:45} max_error {:<12.4e} tolerance {:.1e}", check.max_error, check.tolerance);
            }
            let path = args.out.join("verification.json");
            write_report(&report, &path)?;
            println!("\n{} checks, {failed} failed; wrote {}", report.len(), path.display());
        }
        Command::ListProblems => {
            for p in ProblemId::ALL {
                println!("{:12} {}", p.as_str(), p.description());
            }
        }
    }
    Ok(())
}
