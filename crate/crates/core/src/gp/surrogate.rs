//! Joint kernel over the extended input `(parameters, output index)`.
//!
//! The performance function (output 0) and every safety constraint
//! (outputs `1..=q`) are treated as one scalar function on `A x I`. Without
//! cross terms the joint covariance is block diagonal across outputs; a cross
//! term `k_ij` couples two outputs. An optional context factor multiplies the
//! whole kernel by `k_z(z, z')`, where `z` occupies the trailing input
//! coordinates.

use std::collections::BTreeMap;

use super::kernel::KernelSpec;
use crate::error::{contract, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateKernelSpec {
    /// Index 0 is the performance function, `1..=q` the constraints.
    pub outputs: Vec<KernelSpec>,
    /// Cross-covariances keyed by `(i, j)` with `i < j`.
    pub cross: BTreeMap<(usize, usize), KernelSpec>,
    /// Observation noise standard deviation per output.
    pub noise_std: Vec<f64>,
    /// Product factor over context coordinates.
    pub context: Option<KernelSpec>,
}

impl SurrogateKernelSpec {
    /// Block-diagonal surrogate kernel with independent outputs.
    pub fn independent(outputs: Vec<KernelSpec>, noise_std: Vec<f64>) -> Result<Self> {
        let spec = Self {
            outputs,
            cross: BTreeMap::new(),
            noise_std,
            context: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Adds a cross-covariance between outputs `i` and `j`.
    ///
    /// The cross kernel must share family and lengthscales with both outputs
    /// and its variance may not exceed `sqrt(var_i * var_j)`; under those
    /// conditions the joint kernel is a valid coregionalization kernel.
    pub fn with_cross(mut self, i: usize, j: usize, kernel: KernelSpec) -> Result<Self> {
        let key = if i < j { (i, j) } else { (j, i) };
        if key.0 == key.1 {
            return Err(contract("cross term needs two distinct outputs"));
        }
        self.cross.insert(key, kernel);
        self.validate()?;
        Ok(self)
    }

    pub fn with_context(mut self, kernel: KernelSpec) -> Result<Self> {
        self.context = Some(kernel);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.outputs.is_empty() {
            return Err(contract("surrogate kernel needs at least the performance output"));
        }
        if self.noise_std.len() != self.outputs.len() {
            return Err(contract(format!(
                "{} outputs but {} noise levels",
                self.outputs.len(),
                self.noise_std.len()
            )));
        }
        let dim = self.outputs[0].dim();
        for (i, k) in self.outputs.iter().enumerate() {
            k.validate()?;
            if k.dim() != dim {
                return Err(contract(format!(
                    "output {i} kernel has dimension {}, expected {dim}",
                    k.dim()
                )));
            }
        }
        for (i, s) in self.noise_std.iter().enumerate() {
            if !(*s > 0.0 && s.is_finite()) {
                return Err(contract(format!("noise std of output {i} must be positive, got {s}")));
            }
        }
        for (&(i, j), k) in &self.cross {
            if i >= j || j >= self.outputs.len() {
                return Err(contract(format!("invalid cross term key ({i}, {j})")));
            }
            k.validate()?;
            let (ki, kj) = (&self.outputs[i], &self.outputs[j]);
            if k.family != ki.family
                || k.family != kj.family
                || k.lengthscales != ki.lengthscales
                || k.lengthscales != kj.lengthscales
            {
                return Err(contract(format!(
                    "cross term ({i}, {j}) must share family and lengthscales with both outputs"
                )));
            }
            if k.variance > (ki.variance * kj.variance).sqrt() {
                return Err(contract(format!(
                    "cross term ({i}, {j}) variance exceeds the geometric mean of the output variances"
                )));
            }
        }
        if let Some(ctx) = &self.context {
            ctx.validate()?;
        }
        Ok(())
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    /// Dimension of the parameter part of the input.
    pub fn param_dim(&self) -> usize {
        self.outputs[0].dim()
    }

    pub fn context_dim(&self) -> usize {
        self.context.as_ref().map_or(0, |k| k.dim())
    }

    /// Full input dimension, parameters followed by context coordinates.
    pub fn input_dim(&self) -> usize {
        self.param_dim() + self.context_dim()
    }

    pub fn noise_variance(&self, output: usize) -> f64 {
        self.noise_std[output] * self.noise_std[output]
    }

    pub fn prior_std(&self, output: usize) -> f64 {
        self.outputs[output].prior_std()
    }

    /// Checked evaluation of `k((x, i), (y, j))`.
    pub fn eval(&self, x: &[f64], i: usize, y: &[f64], j: usize) -> Result<f64> {
        let n = self.num_outputs();
        if i >= n || j >= n {
            return Err(contract(format!("output index out of range ({i}, {j}) for {n} outputs")));
        }
        let dim = self.input_dim();
        if x.len() != dim || y.len() != dim {
            return Err(contract(format!(
                "surrogate kernel expects {dim}-dimensional inputs, got {} and {}",
                x.len(),
                y.len()
            )));
        }
        Ok(self.eval_unchecked(x, i, y, j))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], i: usize, y: &[f64], j: usize) -> f64 {
        let d = self.param_dim();
        let base = if i == j {
            self.outputs[i].eval_unchecked(&x[..d], &y[..d])
        } else {
            let key = if i < j { (i, j) } else { (j, i) };
            match self.cross.get(&key) {
                Some(k) => k.eval_unchecked(&x[..d], &y[..d]),
                None => return 0.0,
            }
        };
        match &self.context {
            Some(kz) => base * kz.eval_unchecked(&x[d..], &y[d..]),
            None => base,
        }
    }
}

/// Evaluate the surrogate kernel between `(x, i)` and `(y, j)`.
pub fn surrogate_kernel_eval(
    spec: &SurrogateKernelSpec,
    x: &[f64],
    i: usize,
    y: &[f64],
    j: usize,
) -> Result<f64> {
    spec.eval(x, i, y, j)
}
