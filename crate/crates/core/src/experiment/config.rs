//! TOML experiment files and their resolution into ready-to-run parts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bench::{PlantSpec, SyntheticSpec, INITIAL_GAINS};
use crate::contexts::ContextSpec;
use crate::domain::{GridAxis, Metric, ParameterDomain};
use crate::error::{config_err, Result};
use crate::gp::{KernelFamily, KernelSpec, SurrogateKernelSpec};
use crate::optimizer::{AlgoConfig, BetaSchedule, Lipschitz, SafeSetMode};

/// Schema version this build reads and writes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    pub benchmark: BenchmarkConfig,
    pub domain: DomainConfig,
    /// Performance output first, then one entry per constraint.
    pub outputs: Vec<OutputConfig>,
    pub algorithm: AlgorithmConfig,
    pub seeds: Seeds,
    /// Iteration cap, for the first context when a schedule is given.
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<ContextConfig>,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BenchmarkConfig {
    /// 1 m step; outputs `f` and the rate margin.
    Step {
        #[serde(default)]
        plant: PlantSpec,
        /// Safe seed and reference controller.
        #[serde(default = "default_initial")]
        initial: Vec<f64>,
    },
    /// Unit circle at `speed`; outputs `f`, the RMSE margin and the rate
    /// margin. The reference cost is taken at this speed.
    Circle {
        speed: f64,
        #[serde(default)]
        plant: PlantSpec,
        #[serde(default = "default_initial")]
        initial: Vec<f64>,
    },
    /// One GP draw per seed; the output kernels are also the generating
    /// kernels.
    Synthetic {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        unsafe_probability: Option<f64>,
    },
}

fn default_initial() -> Vec<f64> {
    INITIAL_GAINS.to_vec()
}

impl BenchmarkConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            BenchmarkConfig::Step { .. } => "step",
            BenchmarkConfig::Circle { .. } => "circle",
            BenchmarkConfig::Synthetic { .. } => "synthetic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub axes: Vec<GridAxis>,
    #[serde(default)]
    pub metric: Metric,
}

/// A number, or a multiple of the reference cost of a plant benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scaled {
    Value(f64),
    Relative { cost0: f64 },
}

impl Scaled {
    fn resolve(self, field: &str, cost0: Option<f64>) -> Result<f64> {
        match (self, cost0) {
            (Scaled::Value(v), _) => Ok(v),
            (Scaled::Relative { cost0: k }, Some(c)) => Ok(k * c),
            (Scaled::Relative { .. }, None) => Err(config_err(field, "`cost0` scaling needs a plant benchmark")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default = "default_family")]
    pub family: KernelFamily,
    pub prior_std: Scaled,
    pub lengthscales: Vec<f64>,
    pub noise_std: Scaled,
}

fn default_family() -> KernelFamily {
    KernelFamily::Matern32
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    #[default]
    Safeopt,
    /// Unconstrained GP-UCB on the performance output.
    GpUcb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LipschitzKeyword {
    /// Per-instance slope bound recorded by the synthetic benchmark.
    Empirical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LipschitzConfig {
    Fixed(Lipschitz),
    Keyword(LipschitzKeyword),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    #[serde(default)]
    pub optimizer: OptimizerKind,
    #[serde(default)]
    pub mode: SafeSetMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<LipschitzConfig>,
    #[serde(default = "zero")]
    pub epsilon: Scaled,
    pub beta: BetaSchedule,
    #[serde(default)]
    pub per_output_scaling: bool,
}

fn zero() -> Scaled {
    Scaled::Value(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    List(Vec<u64>),
    Range { start: u64, count: u64 },
}

impl Seeds {
    pub fn expand(&self) -> Vec<u64> {
        match self {
            Seeds::List(v) => v.clone(),
            Seeds::Range { start, count } => (*start..start + count).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OnNoSafeSeed {
    /// End the schedule and keep the run as completed.
    #[default]
    Stop,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextKernelConfig {
    #[serde(default = "default_family")]
    pub family: KernelFamily,
    pub prior_std: f64,
    pub lengthscales: Vec<f64>,
}

/// Reference speed as a context. Only valid with the circle benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextConfig {
    #[serde(default = "default_label")]
    pub label: String,
    #[serde(default = "default_units")]
    pub units: String,
    pub bounds: [f64; 2],
    pub kernel: ContextKernelConfig,
    /// Visited in order; the first entry runs for `iterations`.
    pub schedule: Vec<f64>,
    pub iterations_per_context: usize,
    #[serde(default)]
    pub on_no_safe_seed: OnNoSafeSeed,
}

fn default_label() -> String {
    "speed".into()
}

fn default_units() -> String {
    "m/s".into()
}

/// Everything a run needs, with hyperparameters in absolute units.
#[derive(Debug, Clone)]
pub struct ResolvedExperiment {
    pub config: ExperimentConfig,
    pub domain: ParameterDomain,
    /// Surrogate kernel, with the context factor attached when present.
    pub kernel: SurrogateKernelSpec,
    pub context: Option<ContextSpec>,
    /// `lipschitz` is `None` here when it is taken per synthetic instance.
    pub algo: AlgoConfig,
    pub bench: ResolvedBenchmark,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone)]
pub enum ResolvedBenchmark {
    Plant {
        /// Calibrated plant; `reference_cost` is set.
        plant: PlantSpec,
        /// `None` for the step task, the calibration speed for the circle.
        speed: Option<f64>,
        initial: usize,
    },
    Synthetic {
        spec: SyntheticSpec,
        empirical_lipschitz: bool,
    },
}

impl ResolvedBenchmark {
    pub fn reference_cost(&self) -> Option<f64> {
        match self {
            ResolvedBenchmark::Plant { plant, .. } => Some(plant.reference_cost),
            ResolvedBenchmark::Synthetic { .. } => None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1);
            config_err(line.map_or("config".into(), |l| format!("line {l}")), e.message())
        })?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(config_err(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, got {}", cfg.schema_version),
            ));
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| config_err("config", e.to_string()))
    }

    fn num_outputs_expected(&self) -> Option<usize> {
        match self.benchmark {
            BenchmarkConfig::Step { .. } => Some(2),
            BenchmarkConfig::Circle { .. } => Some(3),
            BenchmarkConfig::Synthetic { .. } => None,
        }
    }

    /// Validates every field and builds the domain, kernels and plant. Plant
    /// benchmarks run one noise-free simulation to obtain the reference cost.
    pub fn resolve(&self) -> Result<ResolvedExperiment> {
        let domain = ParameterDomain::grid(&self.domain.axes, self.domain.metric.clone())
            .map_err(|e| config_err("domain", e.to_string()))?;
        if self.outputs.is_empty() {
            return Err(config_err("outputs", "need at least the performance output"));
        }
        if let Some(q1) = self.num_outputs_expected() {
            if self.outputs.len() != q1 {
                return Err(config_err(
                    "outputs",
                    format!("{} benchmark has {q1} outputs, got {}", self.benchmark.kind(), self.outputs.len()),
                ));
            }
        }
        if self.iterations == 0 {
            return Err(config_err("iterations", "must be positive"));
        }
        let seeds = self.seeds.expand();
        if seeds.is_empty() {
            return Err(config_err("seeds", "no seeds given"));
        }

        let bench = match &self.benchmark {
            BenchmarkConfig::Step { plant, initial } | BenchmarkConfig::Circle { plant, initial, .. } => {
                plant.validate().map_err(|e| config_err("benchmark.plant", e.to_string()))?;
                if domain.dim() != 2 {
                    return Err(config_err("domain.axes", "plant benchmarks tune (tau, zeta)"));
                }
                let gains = <[f64; 2]>::try_from(initial.as_slice())
                    .map_err(|_| config_err("benchmark.initial", "expected [tau, zeta]"))?;
                let initial_idx = domain
                    .index_of(initial, 1e-9)
                    .ok_or_else(|| config_err("benchmark.initial", format!("{initial:?} is not a grid point")))?;
                let (plant, speed) = match self.benchmark {
                    BenchmarkConfig::Circle { speed, .. } => {
                        if !(speed >= 0.0 && speed.is_finite()) {
                            return Err(config_err("benchmark.speed", "must be non-negative"));
                        }
                        (plant.clone().calibrated_circle(gains, speed), Some(speed))
                    }
                    _ => (plant.clone().calibrated_step(gains), None),
                };
                let plant = plant.map_err(|e| config_err("benchmark.plant", e.to_string()))?;
                ResolvedBenchmark::Plant {
                    plant,
                    speed,
                    initial: initial_idx,
                }
            }
            BenchmarkConfig::Synthetic { unsafe_probability } => {
                let cost0 = None;
                let spec = SyntheticSpec {
                    kernels: self.output_kernels(domain.dim(), cost0)?,
                    noise_std: self.noise_levels(cost0)?,
                    unsafe_probability: *unsafe_probability,
                };
                spec.validate().map_err(|e| config_err("benchmark", e.to_string()))?;
                let empirical = matches!(
                    self.algorithm.lipschitz,
                    Some(LipschitzConfig::Keyword(LipschitzKeyword::Empirical))
                );
                ResolvedBenchmark::Synthetic {
                    spec,
                    empirical_lipschitz: empirical,
                }
            }
        };

        let cost0 = bench.reference_cost();
        let kernel = SurrogateKernelSpec::independent(
            self.output_kernels(domain.dim(), cost0)?,
            self.noise_levels(cost0)?,
        )
        .map_err(|e| config_err("outputs", e.to_string()))?;
        let q = kernel.num_outputs() - 1;

        let lipschitz = match &self.algorithm.lipschitz {
            None => None,
            Some(LipschitzConfig::Fixed(l)) => {
                l.validate(q).map_err(|e| config_err("algorithm.lipschitz", e.to_string()))?;
                Some(l.clone())
            }
            Some(LipschitzConfig::Keyword(LipschitzKeyword::Empirical)) => {
                if !matches!(bench, ResolvedBenchmark::Synthetic { .. }) {
                    return Err(config_err("algorithm.lipschitz", "`empirical` needs the synthetic benchmark"));
                }
                None
            }
        };
        let empirical = matches!(bench, ResolvedBenchmark::Synthetic { empirical_lipschitz: true, .. });
        let algo = AlgoConfig {
            mode: self.algorithm.mode,
            lipschitz,
            epsilon: self.algorithm.epsilon.resolve("algorithm.epsilon", cost0)?,
            beta: self.algorithm.beta,
            per_output_scaling: self.algorithm.per_output_scaling,
        };
        // the per-instance constant fills the gap later, so check with a stand-in
        let mut probe = algo.clone();
        if empirical {
            probe.lipschitz = Some(Lipschitz::Uniform(1.0));
        }
        probe.validate(q).map_err(|e| config_err("algorithm", e.to_string()))?;

        let (kernel, context) = match &self.context {
            None => (kernel, None),
            Some(c) => {
                let speed = match bench {
                    ResolvedBenchmark::Plant { speed: Some(s), .. } => s,
                    _ => return Err(config_err("context", "contexts need the circle benchmark")),
                };
                if self.algorithm.optimizer != OptimizerKind::Safeopt {
                    return Err(config_err("context", "contexts are only supported by safeopt"));
                }
                let kz = KernelSpec::new(c.kernel.family, c.kernel.prior_std.powi(2), c.kernel.lengthscales.clone())
                    .map_err(|e| config_err("context.kernel", e.to_string()))?;
                let spec = ContextSpec {
                    labels: vec![c.label.clone()],
                    units: vec![c.units.clone()],
                    bounds: vec![c.bounds],
                    kernel: kz,
                };
                spec.validate().map_err(|e| config_err("context", e.to_string()))?;
                if c.schedule.is_empty() {
                    return Err(config_err("context.schedule", "needs at least one context"));
                }
                for z in std::iter::once(&speed).chain(&c.schedule) {
                    spec.check(&[*z]).map_err(|e| config_err("context.schedule", e.to_string()))?;
                }
                let attached = spec.attach(kernel).map_err(|e| config_err("context.kernel", e.to_string()))?;
                (attached, Some(spec))
            }
        };

        Ok(ResolvedExperiment {
            config: self.clone(),
            domain,
            kernel,
            context,
            algo,
            bench,
            seeds,
        })
    }

    fn output_kernels(&self, dim: usize, cost0: Option<f64>) -> Result<Vec<KernelSpec>> {
        self.outputs
            .iter()
            .enumerate()
            .map(|(i, o)| {
                let field = format!("outputs[{i}]");
                if o.lengthscales.len() != dim {
                    return Err(config_err(
                        format!("{field}.lengthscales"),
                        format!("expected {dim} lengthscales, got {}", o.lengthscales.len()),
                    ));
                }
                let std = o.prior_std.resolve(&format!("{field}.prior_std"), cost0)?;
                KernelSpec::new(o.family, std * std, o.lengthscales.clone())
                    .map_err(|e| config_err(field, e.to_string()))
            })
            .collect()
    }

    fn noise_levels(&self, cost0: Option<f64>) -> Result<Vec<f64>> {
        self.outputs
            .iter()
            .enumerate()
            .map(|(i, o)| {
                let field = format!("outputs[{i}].noise_std");
                let v = o.noise_std.resolve(&field, cost0)?;
                if !(v > 0.0 && v.is_finite()) {
                    return Err(config_err(field, format!("must be positive, got {v}")));
                }
                Ok(v)
            })
            .collect()
    }
}
