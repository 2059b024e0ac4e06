//! Aggregates over a directory of per-seed traces and summaries.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::runner::{RunStatus, RunSummary};
use crate::error::{contract, Result};
use crate::optimizer::RunTrace;

/// Safe-set size statistics at iteration `n` over the runs that reached it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub n: usize,
    pub mean: f64,
    pub min: usize,
    pub max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub runs: usize,
    pub completed: usize,
    pub failed: usize,
    pub skipped: usize,
    /// Runs with at least one violation over completed and failed runs.
    pub violation_rate: f64,
    pub violating_runs: usize,
    pub converged_runs: usize,
    pub median_iterations_to_epsilon: Option<f64>,
    pub median_improvement: Option<f64>,
    pub mean_oracle_gap: Option<f64>,
    pub growth: Vec<GrowthRow>,
}

fn files_with(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|x| x == ext)
                && p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("seed_"))
        })
        .collect();
    out.sort();
    Ok(out)
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 0 { (v[m - 1] + v[m]) / 2.0 } else { v[m] })
}

/// Safe-set growth from a set of traces.
pub fn growth_curve(traces: &[RunTrace]) -> Vec<GrowthRow> {
    let longest = traces.iter().map(RunTrace::len).max().unwrap_or(0);
    (0..longest)
        .map(|k| {
            let sizes: Vec<usize> = traces.iter().filter_map(|t| t.entries().get(k)).map(|e| e.safe_size).collect();
            GrowthRow {
                n: k + 1,
                mean: sizes.iter().sum::<usize>() as f64 / sizes.len() as f64,
                min: *sizes.iter().min().expect("at least one run reaches n"),
                max: *sizes.iter().max().expect("at least one run reaches n"),
            }
        })
        .collect()
}

pub fn write_growth_csv<W: Write>(rows: &[GrowthRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Aggregates from summaries and traces.
pub fn aggregate(summaries: &[RunSummary], traces: &[RunTrace]) -> Report {
    let count = |s: RunStatus| summaries.iter().filter(|r| r.status == s).count();
    let ran: Vec<&RunSummary> = summaries.iter().filter(|r| r.status != RunStatus::Skipped).collect();
    let violating = ran.iter().filter(|r| r.violations > 0).count();
    let iters: Vec<f64> = ran.iter().filter_map(|r| r.iterations_to_epsilon).map(|n| n as f64).collect();
    let gaps: Vec<f64> = ran.iter().filter_map(|r| r.oracle_gap).collect();
    Report {
        runs: summaries.len(),
        completed: count(RunStatus::Completed),
        failed: count(RunStatus::Failed),
        skipped: count(RunStatus::Skipped),
        violation_rate: if ran.is_empty() { 0.0 } else { violating as f64 / ran.len() as f64 },
        violating_runs: violating,
        converged_runs: iters.len(),
        median_iterations_to_epsilon: median(iters),
        median_improvement: median(ran.iter().filter_map(|r| r.improvement).collect()),
        mean_oracle_gap: (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64),
        growth: growth_curve(traces),
    }
}

/// Reads every `seed_*.json` and `seed_*.csv` in `dir`, writes
/// `summary.json` and `growth.csv` next to them, and returns the report.
pub fn summarize(dir: impl AsRef<Path>) -> Result<Report> {
    let dir = dir.as_ref();
    let summaries = files_with(dir, "json")?
        .iter()
        .map(|p| Ok(serde_json::from_str::<RunSummary>(&fs::read_to_string(p)?)?))
        .collect::<Result<Vec<_>>>()?;
    let traces = files_with(dir, "csv")?
        .iter()
        .map(RunTrace::load)
        .collect::<Result<Vec<_>>>()?;
    if summaries.is_empty() && traces.is_empty() {
        return Err(contract(format!("no traces found in {}", dir.display())));
    }
    let report = aggregate(&summaries, &traces);
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    write_growth_csv(&report.growth, fs::File::create(dir.join("growth.csv"))?)?;
    Ok(report)
}
