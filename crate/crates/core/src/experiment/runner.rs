//! Seeded runs of a resolved experiment and their on-disk artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use rand::RngCore;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, OnNoSafeSeed, OptimizerKind, ResolvedBenchmark, ResolvedExperiment};
use crate::bench::{sample_synthetic, simulate_circle, simulate_step, PlantSpec, SyntheticInstance};
use crate::contexts;
use crate::error::{Error, Result};
use crate::optimizer::{BoxError, EntryStatus, GpUcb, Lipschitz, Objective, RunTrace, SafeOpt, StopReason};
use crate::oracle::baseline_optimum;
use crate::rng::{component_rng, Component};

/// Noisy plant evaluations; every call draws a fresh simulation seed from the
/// plant-noise stream.
pub struct PlantObjective {
    plant: PlantSpec,
    speed: Option<f64>,
    rng: ChaCha8Rng,
}

impl PlantObjective {
    /// `speed` selects the circle task, `None` the step task.
    pub fn new(plant: PlantSpec, speed: Option<f64>, root_seed: u64) -> Self {
        Self {
            plant,
            speed,
            rng: component_rng(root_seed, Component::PlantNoise),
        }
    }
}

impl Objective for PlantObjective {
    fn evaluate(&mut self, params: &[f64], context: Option<&[f64]>) -> Result<Vec<f64>, BoxError> {
        let seed = self.rng.next_u64();
        let r = match (self.speed, context) {
            (None, _) => simulate_step(&self.plant, params, seed)?,
            (Some(_), Some(z)) => simulate_circle(&self.plant, params, z[0], seed)?,
            (Some(v), None) => simulate_circle(&self.plant, params, v, seed)?,
        };
        Ok(r.outputs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    /// Aborted by an error; the trace holds everything up to the failure.
    Failed,
    /// Nothing to run, e.g. a synthetic draw without a safe point.
    Skipped,
}

/// Best estimate at the end of one context of a schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextResult {
    pub context: Vec<f64>,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub best: Vec<f64>,
    pub best_lower: Option<f64>,
    pub safe_size: usize,
}

/// Per-seed JSON summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub seed: u64,
    pub benchmark: String,
    pub optimizer: OptimizerKind,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Trace rows, failed evaluations included.
    pub evaluations: usize,
    pub stop_reason: Option<StopReason>,
    /// Iterations run before every score fell below epsilon.
    pub iterations_to_epsilon: Option<usize>,
    pub final_best: Option<Vec<f64>>,
    pub final_best_lower: Option<f64>,
    /// Evaluations with a negative constraint value: the true value on
    /// synthetic instances, the simulated one on the plant.
    pub violations: usize,
    pub misspecification_events: usize,
    pub reference_cost: Option<f64>,
    /// Noise-free cost of the final best estimate.
    pub best_cost: Option<f64>,
    /// `1 - best_cost / reference_cost`, when both refer to the same task.
    pub improvement: Option<f64>,
    /// `f*_eps` of the synthetic instance.
    pub oracle_optimum: Option<f64>,
    pub best_value: Option<f64>,
    /// `f*_eps - f(best)`.
    pub oracle_gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub contexts: Vec<ContextResult>,
    /// First scheduled context without a certified safe seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_stopped_at: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct SeedRun {
    pub trace: RunTrace,
    pub summary: RunSummary,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl ResolvedExperiment {
    pub fn num_outputs(&self) -> usize {
        self.kernel.num_outputs()
    }

    /// Synthetic instance for `seed`, or `None` for plant benchmarks.
    pub fn instance(&self, seed: u64) -> Result<Option<SyntheticInstance>> {
        match &self.bench {
            ResolvedBenchmark::Synthetic { spec, .. } => Ok(Some(sample_synthetic(seed, spec, &self.domain)?)),
            ResolvedBenchmark::Plant { .. } => Ok(None),
        }
    }

    /// Lipschitz constants used for `instance`.
    pub fn lipschitz_for(&self, instance: Option<&SyntheticInstance>) -> Option<Lipschitz> {
        match (&self.bench, instance) {
            (ResolvedBenchmark::Synthetic { empirical_lipschitz: true, .. }, Some(inst)) => {
                Some(inst.lipschitz_constants())
            }
            _ => self.algo.lipschitz.clone(),
        }
    }

    /// A SafeOpt instance at the first scheduled context, seeded with the
    /// benchmark's safe point.
    pub fn safeopt(&self, instance: Option<&SyntheticInstance>) -> Result<SafeOpt> {
        let seed = match (&self.bench, instance) {
            (ResolvedBenchmark::Plant { initial, .. }, _) => vec![*initial],
            (ResolvedBenchmark::Synthetic { .. }, Some(inst)) => inst.safe_seed.clone(),
            (ResolvedBenchmark::Synthetic { .. }, None) => {
                return Err(crate::error::contract("synthetic benchmark needs an instance"))
            }
        };
        let mut algo = self.algo.clone();
        algo.lipschitz = self.lipschitz_for(instance);
        match &self.config.context {
            Some(c) => SafeOpt::contextual(self.domain.clone(), self.kernel.clone(), seed, algo, vec![c.schedule[0]]),
            None => SafeOpt::new(self.domain.clone(), self.kernel.clone(), seed, algo),
        }
    }

    fn objective<'a>(&self, seed: u64, instance: Option<&'a SyntheticInstance>) -> Box<dyn Objective + 'a> {
        match (&self.bench, instance) {
            (_, Some(inst)) => Box::new(inst.objective(seed)),
            (ResolvedBenchmark::Plant { plant, speed, .. }, None) => {
                Box::new(PlantObjective::new(plant.clone(), *speed, seed))
            }
            (ResolvedBenchmark::Synthetic { .. }, None) => unreachable!("synthetic runs always carry an instance"),
        }
    }

    fn empty_summary(&self, seed: u64) -> RunSummary {
        RunSummary {
            name: self.config.name.clone(),
            seed,
            benchmark: self.config.benchmark.kind().into(),
            optimizer: self.config.algorithm.optimizer,
            status: RunStatus::Completed,
            error: None,
            evaluations: 0,
            stop_reason: None,
            iterations_to_epsilon: None,
            final_best: None,
            final_best_lower: None,
            violations: 0,
            misspecification_events: 0,
            reference_cost: self.bench.reference_cost(),
            best_cost: None,
            improvement: None,
            oracle_optimum: None,
            best_value: None,
            oracle_gap: None,
            contexts: Vec::new(),
            context_stopped_at: None,
        }
    }

    /// Runs one seed. Runtime failures end up in the summary, not in the
    /// returned error; only setup problems are returned as `Err`.
    pub fn run_seed(&self, seed: u64) -> Result<SeedRun> {
        let mut summary = self.empty_summary(seed);
        let instance = self.instance(seed)?;
        if let Some(inst) = &instance {
            if inst.safe_seed.is_empty() {
                summary.status = RunStatus::Skipped;
                summary.error = Some("no safe point in the synthetic draw".into());
                let trace = RunTrace::new(self.domain.dim(), 0, self.num_outputs());
                return Ok(SeedRun { trace, summary });
            }
        }
        let mut objective = self.objective(seed, instance.as_ref());
        let (trace, best, context, outcome) = match self.config.algorithm.optimizer {
            OptimizerKind::Safeopt => {
                let mut opt = self.safeopt(instance.as_ref())?;
                let outcome = self.drive_safeopt(&mut opt, objective.as_mut(), &mut summary);
                summary.misspecification_events = opt.misspecification_events().len();
                let best = match outcome {
                    Ok(_) => opt.best_estimate().ok(),
                    Err(_) => None,
                };
                let ctx = opt.context().map(<[f64]>::to_vec);
                (opt.into_trace(), best, ctx, outcome)
            }
            OptimizerKind::GpUcb => {
                let mut ucb = GpUcb::new(self.domain.clone(), self.kernel.clone(), self.algo.beta)?;
                let outcome = ucb.run(objective.as_mut(), self.config.iterations);
                let best = outcome.is_ok().then(|| (ucb.mean_maximizer(), f64::NAN));
                if outcome.is_ok() {
                    summary.stop_reason = Some(StopReason::MaxIterations);
                }
                (ucb.into_trace(), best, None, outcome)
            }
        };
        drop(objective);
        summary.evaluations = trace.len();
        summary.violations = self.count_violations(&trace, instance.as_ref());
        if let Err(e) = outcome {
            summary.status = RunStatus::Failed;
            summary.error = Some(e.to_string());
            return Ok(SeedRun { trace, summary });
        }
        if let Some((b, lower)) = best {
            summary.final_best = Some(self.domain.point(b).to_vec());
            summary.final_best_lower = finite(lower);
            self.score_best(b, context.as_deref(), instance.as_ref(), &mut summary)?;
        }
        Ok(SeedRun { trace, summary })
    }

    fn drive_safeopt(&self, opt: &mut SafeOpt, objective: &mut dyn Objective, summary: &mut RunSummary) -> Result<()> {
        let record = |opt: &mut SafeOpt, iterations: usize, stop: StopReason, summary: &mut RunSummary| {
            let (b, lower) = opt.best_estimate()?;
            let safe_size = opt.sets()?.safe.len();
            summary.stop_reason = Some(stop);
            if stop == StopReason::Converged && summary.iterations_to_epsilon.is_none() {
                summary.iterations_to_epsilon = Some(opt.iteration());
            }
            if opt.context().is_some() {
                summary.contexts.push(ContextResult {
                    context: opt.context().unwrap_or_default().to_vec(),
                    iterations,
                    stop_reason: stop,
                    best: opt.domain().point(b).to_vec(),
                    best_lower: finite(lower),
                    safe_size,
                });
            }
            Ok::<_, Error>(())
        };
        let before = opt.iteration();
        let outcome = opt.run(objective, self.config.iterations)?;
        record(opt, opt.iteration() - before, outcome.stop, summary)?;
        let (Some(cfg), Some(spec)) = (&self.config.context, &self.context) else {
            return Ok(());
        };
        for &z in &cfg.schedule[1..] {
            match contexts::fix_context(opt, spec, &[z]) {
                Ok(()) => {}
                Err(Error::NoSafeSeed { context }) if cfg.on_no_safe_seed == OnNoSafeSeed::Stop => {
                    summary.context_stopped_at = Some(context);
                    break;
                }
                Err(e) => return Err(e),
            }
            let before = opt.iteration();
            let outcome = opt.run(objective, cfg.iterations_per_context)?;
            record(opt, opt.iteration() - before, outcome.stop, summary)?;
        }
        Ok(())
    }

    fn count_violations(&self, trace: &RunTrace, instance: Option<&SyntheticInstance>) -> usize {
        trace
            .entries()
            .iter()
            .filter(|e| match instance {
                Some(inst) => !inst.truth.is_safe(e.point),
                None => e.status == EntryStatus::Ok && e.observations[1..].iter().any(|g| *g < 0.0),
            })
            .count()
    }

    fn score_best(
        &self,
        best: usize,
        context: Option<&[f64]>,
        instance: Option<&SyntheticInstance>,
        summary: &mut RunSummary,
    ) -> Result<()> {
        match (&self.bench, instance) {
            (_, Some(inst)) => {
                let value = inst.truth.value(0, best);
                summary.best_value = Some(value);
                // the reachability baseline is only defined with Lipschitz constants
                let Some(lip) = self.lipschitz_for(Some(inst)) else {
                    return Ok(());
                };
                let fstar = baseline_optimum(&inst.safe_seed, &inst.truth, &self.domain, &lip, self.algo.epsilon)?;
                summary.oracle_optimum = Some(fstar);
                summary.oracle_gap = Some(fstar - value);
            }
            (ResolvedBenchmark::Plant { plant, speed, .. }, None) => {
                let params = self.domain.point(best);
                let quiet = plant.noiseless();
                let cost = match (speed, context) {
                    (None, _) => simulate_step(&quiet, params, 0)?.cost,
                    (Some(_), Some(z)) => simulate_circle(&quiet, params, z[0], 0)?.cost,
                    (Some(v), None) => simulate_circle(&quiet, params, *v, 0)?.cost,
                };
                summary.best_cost = Some(cost);
                let same_task = match (speed, context) {
                    (Some(v), Some(z)) => z[0] == *v,
                    _ => true,
                };
                if same_task && plant.reference_cost > 0.0 {
                    summary.improvement = Some(1.0 - cost / plant.reference_cost);
                }
            }
            (ResolvedBenchmark::Synthetic { .. }, None) => {}
        }
        Ok(())
    }
}

/// Command-line style overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    /// Replace the seed list with this single seed.
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, mut config: ExperimentConfig) -> ExperimentConfig {
        if let Some(s) = self.seed {
            config.seeds = super::config::Seeds::List(vec![s]);
        }
        if let Some(o) = &self.output_dir {
            config.output_dir = o.clone();
        }
        config
    }
}

pub fn trace_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("seed_{seed:04}.csv"))
}

pub fn summary_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("seed_{seed:04}.json"))
}

/// Runs every seed in parallel and writes `seed_NNNN.csv`, `seed_NNNN.json`
/// and a copy of the effective config into the output directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunSummary>> {
    let resolved = config.resolve()?;
    let dir = &config.output_dir;
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.toml"), config.to_toml()?)?;
    resolved
        .seeds
        .par_iter()
        .map(|&seed| {
            let run = resolved.run_seed(seed)?;
            if run.summary.status != RunStatus::Skipped {
                run.trace.save(trace_path(dir, seed))?;
            }
            let json = serde_json::to_string_pretty(&run.summary)?;
            fs::write(summary_path(dir, seed), json + "\n")?;
            Ok(run.summary)
        })
        .collect()
}
