//! Config-driven experiments: seeded runs, per-seed artifacts, aggregation
//! and the synthetic oracle export.

mod config;
mod runner;
mod summary;

use std::fs;

use serde::{Deserialize, Serialize};

pub use config::{
    AlgorithmConfig, BenchmarkConfig, ContextConfig, ContextKernelConfig, DomainConfig, ExperimentConfig,
    LipschitzConfig, LipschitzKeyword, OnNoSafeSeed, OptimizerKind, OutputConfig, ResolvedBenchmark,
    ResolvedExperiment, Scaled, Seeds, SCHEMA_VERSION,
};
pub use runner::{
    run_experiment, summary_path, trace_path, ContextResult, Overrides, PlantObjective, RunStatus, RunSummary,
    SeedRun,
};
pub use summary::{aggregate, growth_curve, summarize, write_growth_csv, GrowthRow, Report};

use crate::error::{config_err, Result};
use crate::oracle::reach_closure;

/// Reachable closure and its optimum for one synthetic draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub seed: u64,
    pub safe_seed: Vec<usize>,
    pub unsafe_fraction: f64,
    pub lipschitz: Vec<f64>,
    pub epsilon: f64,
    /// Indices of the closure, empty when the draw has no safe point.
    pub reachable: Vec<usize>,
    pub optimum: Option<f64>,
    pub optimum_point: Option<Vec<f64>>,
}

/// For every seed: exports the truth table to `truth_NNNN.csv` and the
/// closure to `oracle_NNNN.json` in the output directory.
pub fn oracle_export(config: &ExperimentConfig) -> Result<Vec<OracleReport>> {
    let resolved = config.resolve()?;
    if !matches!(resolved.bench, ResolvedBenchmark::Synthetic { .. }) {
        return Err(config_err("benchmark.kind", "the oracle needs a synthetic benchmark"));
    }
    let dir = &config.output_dir;
    fs::create_dir_all(dir)?;
    let eps = resolved.algo.epsilon;
    resolved
        .seeds
        .iter()
        .map(|&seed| {
            let inst = resolved.instance(seed)?.expect("synthetic benchmark");
            let lip = resolved
                .lipschitz_for(Some(&inst))
                .ok_or_else(|| config_err("algorithm.lipschitz", "the oracle needs Lipschitz constants"))?;
            let q = inst.truth.num_outputs() - 1;
            let (reachable, optimum, optimum_point) = if inst.safe_seed.is_empty() {
                (Vec::new(), None, None)
            } else {
                let r = reach_closure(&inst.safe_seed, &inst.truth, &inst.domain, &lip, eps)?;
                let best = *r
                    .iter()
                    .max_by(|a, b| inst.truth.value(0, **a).total_cmp(&inst.truth.value(0, **b)).then(b.cmp(a)))
                    .expect("closure contains the seed");
                let point = inst.domain.point(best).to_vec();
                (r, Some(inst.truth.value(0, best)), Some(point))
            };
            let report = OracleReport {
                seed,
                safe_seed: inst.safe_seed.clone(),
                unsafe_fraction: inst.unsafe_fraction(),
                lipschitz: (1..=q).map(|i| lip.get(i)).collect(),
                epsilon: eps,
                reachable,
                optimum,
                optimum_point,
            };
            inst.save_truth(dir.join(format!("truth_{seed:04}.csv")))?;
            fs::write(dir.join(format!("oracle_{seed:04}.json")), serde_json::to_string_pretty(&report)? + "\n")?;
            Ok(report)
        })
        .collect()
}
