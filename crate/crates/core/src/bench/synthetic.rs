//! Test functions drawn from the GP prior on a grid.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::domain::ParameterDomain;
use crate::error::{contract, Error, Result};
use crate::gp::{KernelSpec, SurrogateKernelSpec, JITTER};
use crate::optimizer::{BoxError, Lipschitz, Objective};
use crate::oracle::GroundTruth;
use crate::rng::{component_rng, Component};

/// Largest grid that is sampled densely.
pub const MAX_SYNTHETIC_POINTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    /// Generating kernel per output, performance first. Also the kernels the
    /// optimizer assumes.
    pub kernels: Vec<KernelSpec>,
    pub noise_std: Vec<f64>,
    /// Prior probability that a constraint value is negative at any point.
    /// Each constraint is shifted by `-sigma * Phi^-1(p)`; `None` keeps the
    /// zero-mean draw.
    pub unsafe_probability: Option<f64>,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.kernels.is_empty() || self.kernels.len() != self.noise_std.len() {
            return Err(contract("need one kernel and one noise level per output"));
        }
        for k in &self.kernels {
            k.validate()?;
        }
        if self.noise_std.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(contract("noise levels must be positive"));
        }
        if let Some(p) = self.unsafe_probability {
            if !(p > 0.0 && p < 1.0) {
                return Err(contract(format!("unsafe probability must lie in (0, 1), got {p}")));
            }
        }
        Ok(())
    }

    /// Constant added to each output's sample.
    pub fn offsets(&self) -> Vec<f64> {
        let std_normal = Normal::new(0.0, 1.0).expect("standard normal");
        self.kernels
            .iter()
            .enumerate()
            .map(|(i, k)| match self.unsafe_probability {
                Some(p) if i > 0 => -k.prior_std() * std_normal.inverse_cdf(p),
                _ => 0.0,
            })
            .collect()
    }

    pub fn surrogate(&self) -> Result<SurrogateKernelSpec> {
        SurrogateKernelSpec::independent(self.kernels.clone(), self.noise_std.clone())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticInstance {
    pub domain: ParameterDomain,
    pub seed: u64,
    pub spec: SyntheticSpec,
    pub truth: GroundTruth,
    /// Largest finite-difference slope of each constraint table, over all
    /// pairs of grid points.
    pub lipschitz: Vec<f64>,
    /// The point with the largest worst-case constraint value, or empty when
    /// no grid point is safe.
    pub safe_seed: Vec<usize>,
}

impl SyntheticInstance {
    pub fn lipschitz_constants(&self) -> Lipschitz {
        Lipschitz::PerConstraint(self.lipschitz.clone())
    }

    /// Share of grid points violating at least one constraint.
    pub fn unsafe_fraction(&self) -> f64 {
        let n = self.domain.len();
        (0..n).filter(|&a| !self.truth.is_safe(a)).count() as f64 / n as f64
    }

    /// Noisy evaluator whose noise stream is derived from `root_seed`.
    pub fn objective(&self, root_seed: u64) -> SyntheticObjective<'_> {
        SyntheticObjective {
            instance: self,
            rng: component_rng(root_seed, Component::ModelNoise),
        }
    }

    /// Writes `point, a0.., y0..` for every grid point.
    pub fn write_truth_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["point".to_string()];
        header.extend((0..self.domain.dim()).map(|k| format!("a{k}")));
        header.extend((0..self.truth.num_outputs()).map(|k| format!("y{k}")));
        w.write_record(&header)?;
        for a in 0..self.domain.len() {
            let mut row = vec![a.to_string()];
            row.extend(self.domain.point(a).iter().map(f64::to_string));
            row.extend((0..self.truth.num_outputs()).map(|i| self.truth.value(i, a).to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_truth(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_truth_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }
}

/// Draws a zero-mean GP sample over all domain points.
fn draw(kernel: &KernelSpec, domain: &ParameterDomain, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let n = domain.len();
    let gram = DMatrix::from_fn(n, n, |r, c| kernel.eval_unchecked(domain.point(r), domain.point(c)));
    let chol = match gram.clone().cholesky() {
        Some(c) => c,
        None => {
            let jittered = gram + DMatrix::identity(n, n) * (JITTER * kernel.variance);
            jittered
                .cholesky()
                .ok_or_else(|| Error::Numerical("prior Gram matrix not positive definite after jitter".into()))?
        }
    };
    let z = nalgebra::DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
    Ok((chol.l() * z).iter().copied().collect())
}

/// Draws an instance: one independent GP sample per output plus the constraint
/// offsets. Reproducible per `seed`.
pub fn sample_synthetic(seed: u64, spec: &SyntheticSpec, domain: &ParameterDomain) -> Result<SyntheticInstance> {
    spec.validate()?;
    if domain.len() > MAX_SYNTHETIC_POINTS {
        return Err(contract(format!(
            "synthetic grids are limited to {MAX_SYNTHETIC_POINTS} points, got {}",
            domain.len()
        )));
    }
    if spec.kernels.iter().any(|k| k.dim() != domain.dim()) {
        return Err(contract("kernel dimension differs from the domain"));
    }
    let mut rng = component_rng(seed, Component::SyntheticDraw);
    let offsets = spec.offsets();
    let mut tables = Vec::with_capacity(spec.kernels.len());
    for (k, c) in spec.kernels.iter().zip(&offsets) {
        tables.push(draw(k, domain, &mut rng)?.into_iter().map(|v| v + c).collect::<Vec<f64>>());
    }
    let truth = GroundTruth::new(tables)?;
    let n = domain.len();
    let lipschitz = (1..truth.num_outputs())
        .map(|i| {
            let t = truth.table(i);
            let mut best = 0.0f64;
            for a in 0..n {
                for b in a + 1..n {
                    best = best.max((t[a] - t[b]).abs() / domain.distance(a, b));
                }
            }
            // a constant table still needs a positive constant
            best.max(f64::MIN_POSITIVE)
        })
        .collect();
    let worst = |a: usize| (1..truth.num_outputs()).map(|i| truth.value(i, a)).fold(f64::INFINITY, f64::min);
    let mut seed_point = 0;
    for a in 1..n {
        if worst(a) > worst(seed_point) {
            seed_point = a;
        }
    }
    let safe_seed = if truth.is_safe(seed_point) { vec![seed_point] } else { Vec::new() };
    Ok(SyntheticInstance {
        domain: domain.clone(),
        seed,
        spec: spec.clone(),
        truth,
        lipschitz,
        safe_seed,
    })
}

/// Truth plus Gaussian measurement noise at grid points.
pub struct SyntheticObjective<'a> {
    instance: &'a SyntheticInstance,
    rng: ChaCha8Rng,
}

impl Objective for SyntheticObjective<'_> {
    fn evaluate(&mut self, params: &[f64], _context: Option<&[f64]>) -> Result<Vec<f64>, BoxError> {
        let inst = self.instance;
        let a = inst
            .domain
            .index_of(params, 1e-12)
            .ok_or_else(|| format!("{params:?} is not a grid point"))?;
        Ok((0..inst.truth.num_outputs())
            .map(|i| inst.truth.value(i, a) + inst.spec.noise_std[i] * self.rng.sample::<f64, _>(StandardNormal))
            .collect())
    }
}
