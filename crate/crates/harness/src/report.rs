//! CSV output: one row per replication, and an aggregate table pairing the
//! relaxed and original rules cell by cell.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::Serialize;
use stochastic_ruler::format::fmt_sig;

use crate::runner::{round_sig, RunRow};

pub const RUN_COLUMNS: [&str; 18] = [
    "problem",
    "variant",
    "alpha",
    "min_decrease",
    "replication",
    "seed",
    "iterations",
    "replicates",
    "warmup_replicates",
    "stay_proposals",
    "accepted_moves",
    "terminated_reason",
    "success",
    "initial_solution",
    "initial_objective",
    "final_solution",
    "final_objective",
    "exact_objective",
];

fn opt(v: Option<f64>) -> String {
    v.map(fmt_sig).unwrap_or_default()
}

pub fn write_runs_csv<W: Write>(rows: &[RunRow], out: W) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RUN_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.problem.clone(),
            r.variant.clone(),
            opt(r.alpha),
            opt(r.min_decrease),
            r.replication.to_string(),
            r.seed.to_string(),
            r.iterations.to_string(),
            r.replicates.to_string(),
            r.warmup_replicates.to_string(),
            r.stay_proposals.to_string(),
            r.accepted_moves.to_string(),
            r.terminated_reason.clone(),
            r.success.to_string(),
            r.initial_solution.clone(),
            opt(r.initial_objective),
            r.final_solution.clone(),
            opt(r.final_objective),
            opt(r.exact_objective),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_runs_csv<R: Read>(input: R) -> anyhow::Result<Vec<RunRow>> {
    let mut r = csv::Reader::from_reader(input);
    let rows = r.deserialize().collect::<Result<Vec<RunRow>, _>>()?;
    Ok(rows)
}

/// Statistics of one (rule, level) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantStats {
    pub replications: usize,
    pub failures: usize,
    pub mean_k: f64,
    pub sd_k: Option<f64>,
    /// Mean iterations over successful runs.
    pub mean_k_success: Option<f64>,
    /// Mean final objective estimate over successful runs.
    pub hbar: Option<f64>,
    pub mean_replicates: f64,
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn sd(xs: &[f64]) -> Option<f64> {
    let m = mean(xs)?;
    (xs.len() > 1).then(|| (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt())
}

impl VariantStats {
    pub fn from_rows(rows: &[&RunRow]) -> Option<VariantStats> {
        if rows.is_empty() {
            return None;
        }
        let k: Vec<f64> = rows.iter().map(|r| r.iterations as f64).collect();
        let ok: Vec<&&RunRow> = rows.iter().filter(|r| r.success).collect();
        let k_ok: Vec<f64> = ok.iter().map(|r| r.iterations as f64).collect();
        let h_ok: Vec<f64> = ok.iter().filter_map(|r| r.final_objective).collect();
        let reps: Vec<f64> = rows.iter().map(|r| r.replicates as f64).collect();
        Some(VariantStats {
            replications: rows.len(),
            failures: rows.len() - ok.len(),
            mean_k: round_sig(mean(&k)?),
            sd_k: sd(&k).map(round_sig),
            mean_k_success: mean(&k_ok).map(round_sig),
            hbar: mean(&h_ok).map(round_sig),
            mean_replicates: round_sig(mean(&reps)?),
        })
    }
}

/// One line of the aggregate table: a relaxed cell beside the original cell
/// at the same minimum-decrease level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub alpha: Option<f64>,
    pub min_decrease: Option<f64>,
    pub relaxed: Option<VariantStats>,
    pub original: Option<VariantStats>,
}

pub const AGGREGATE_COLUMNS: [&str; 16] = [
    "problem",
    "alpha",
    "min_decrease",
    "replications",
    "failures_relaxed",
    "failures_original",
    "mean_k_relaxed",
    "mean_k_original",
    "sd_k_relaxed",
    "sd_k_original",
    "mean_k_success_relaxed",
    "mean_k_success_original",
    "hbar_relaxed",
    "hbar_original",
    "mean_replicates_relaxed",
    "mean_replicates_original",
];

/// Orders levels and alphas numerically; they are finite by construction.
fn key(v: Option<f64>) -> i64 {
    v.map_or(-1, |x| (x * 1e9).round() as i64)
}

pub fn aggregate(rows: &[RunRow]) -> Vec<AggregateRow> {
    let mut levels: BTreeMap<i64, (Option<f64>, Vec<&RunRow>)> = BTreeMap::new();
    for r in rows {
        levels.entry(key(r.min_decrease)).or_insert_with(|| (r.min_decrease, Vec::new())).1.push(r);
    }
    let mut out = Vec::new();
    for (_, (level, level_rows)) in levels {
        let original: Vec<&RunRow> = level_rows.iter().copied().filter(|r| !r.is_relaxed()).collect();
        let original_stats = VariantStats::from_rows(&original);
        let mut alphas: BTreeMap<i64, (Option<f64>, Vec<&RunRow>)> = BTreeMap::new();
        for r in level_rows.iter().copied().filter(|r| r.is_relaxed()) {
            alphas.entry(key(r.alpha)).or_insert_with(|| (r.alpha, Vec::new())).1.push(r);
        }
        if alphas.is_empty() {
            out.push(AggregateRow { alpha: None, min_decrease: level, relaxed: None, original: original_stats });
            continue;
        }
        // Highest alpha first.
        for (_, (alpha, relaxed)) in alphas.into_iter().rev() {
            out.push(AggregateRow {
                alpha,
                min_decrease: level,
                relaxed: VariantStats::from_rows(&relaxed),
                original: original_stats.clone(),
            });
        }
    }
    out
}

pub fn write_aggregate_csv<W: Write>(problem: &str, rows: &[AggregateRow], out: W) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(AGGREGATE_COLUMNS)?;
    for a in rows {
        let (rel, ori) = (a.relaxed.as_ref(), a.original.as_ref());
        let both = |f: &dyn Fn(&VariantStats) -> Option<f64>| [opt(rel.and_then(f)), opt(ori.and_then(f))];
        let reps = rel.or(ori).map(|s| s.replications.to_string()).unwrap_or_default();
        let mut rec = vec![problem.to_string(), opt(a.alpha), opt(a.min_decrease), reps];
        rec.extend(both(&|s| Some(s.failures as f64)));
        rec.extend(both(&|s| Some(s.mean_k)));
        rec.extend(both(&|s| s.sd_k));
        rec.extend(both(&|s| s.mean_k_success));
        rec.extend(both(&|s| s.hbar));
        rec.extend(both(&|s| Some(s.mean_replicates)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Renders the aggregate table for the terminal.
pub fn render_aggregate(problem: &str, rows: &[AggregateRow]) -> String {
    let mut buf = Vec::new();
    write_aggregate_csv(problem, rows, &mut buf).expect("writing to memory");
    let text = String::from_utf8(buf).expect("utf-8");
    let table: Vec<Vec<String>> = text.lines().map(|l| l.split(',').map(str::to_string).collect()).collect();
    let width: Vec<usize> = (0..AGGREGATE_COLUMNS.len())
        .map(|c| table.iter().map(|r| r.get(c).map_or(0, |s| s.len())).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in table {
        let cells: Vec<String> = r.iter().enumerate().map(|(c, s)| format!("{s:>w$}", w = width[c])).collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}
