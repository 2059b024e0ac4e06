//! Exact GP posterior over the surrogate input space.
//!
//! The model keeps the lower Cholesky factor `L` of `K + diag(noise)` and the
//! whitened targets `z = L^-1 y`. For a query `x*` with cross-covariance
//! vector `k*` and `v = L^-1 k*`:
//!
//! ```text
//! mean     = v . z
//! variance = k(x*, x*) - v . v
//! ```
//!
//! Conditioning appends one row to `L` and one entry to `z`, so sequential
//! conditioning performs exactly the arithmetic of a batch factorization.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::surrogate::SurrogateKernelSpec;
use crate::error::{contract, Error, Result};

/// Relative jitter added to a failing pivot before the single retry.
pub const JITTER: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Parameters followed by context coordinates, if any.
    pub x: Vec<f64>,
    pub output: usize,
    pub value: f64,
}

impl Observation {
    pub fn new(x: Vec<f64>, output: usize, value: f64) -> Self {
        Self { x, output, value }
    }
}

pub type Dataset = Vec<Observation>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub mean: f64,
    pub variance: f64,
}

impl Posterior {
    pub fn std(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Packed lower-triangular Cholesky factor, grown one row at a time.
#[derive(Debug, Clone, Default)]
struct TriangularFactor {
    rows: Vec<Vec<f64>>,
}

impl TriangularFactor {
    fn len(&self) -> usize {
        self.rows.len()
    }

    /// Solves `L v = b` in place.
    fn forward_solve(&self, b: &mut [f64]) {
        for (i, row) in self.rows.iter().enumerate() {
            let (diag, off) = row.split_last().expect("non-empty row");
            let s: f64 = off.iter().zip(&b[..i]).map(|(l, v)| l * v).sum();
            b[i] = (b[i] - s) / diag;
        }
    }

    /// Appends the row for a new point with covariances `cross` against the
    /// existing points and regularized self-covariance `diag`. Returns the
    /// whitened cross vector so callers can extend `z`.
    fn push(&mut self, mut cross: Vec<f64>, diag: f64, jitter: f64) -> Result<Vec<f64>> {
        self.forward_solve(&mut cross);
        let sq: f64 = cross.iter().map(|v| v * v).sum();
        let mut pivot = diag - sq;
        if !(pivot > 0.0) {
            pivot = diag + jitter - sq;
            if !(pivot > 0.0 && pivot.is_finite()) {
                return Err(Error::Numerical(format!(
                    "Gram matrix is not positive definite at row {} (pivot {pivot:e} after jitter)",
                    self.len()
                )));
            }
        }
        let mut row = cross.clone();
        row.push(pivot.sqrt());
        self.rows.push(row);
        Ok(cross)
    }

    fn diag(&self, i: usize) -> f64 {
        self.rows[i][i]
    }
}

/// A Gaussian-process model conditioned on noisy observations of the
/// surrogate function.
#[derive(Debug, Clone)]
pub struct GpModel {
    spec: SurrogateKernelSpec,
    data: Dataset,
    factor: TriangularFactor,
    whitened: Vec<f64>,
}

impl GpModel {
    pub fn new(spec: SurrogateKernelSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            spec,
            data: Vec::new(),
            factor: TriangularFactor::default(),
            whitened: Vec::new(),
        })
    }

    /// Builds a model conditioned on every row of `data`.
    pub fn with_data(spec: SurrogateKernelSpec, data: impl IntoIterator<Item = Observation>) -> Result<Self> {
        let mut model = Self::new(spec)?;
        for obs in data {
            model.condition(obs)?;
        }
        Ok(model)
    }

    pub fn spec(&self) -> &SurrogateKernelSpec {
        &self.spec
    }

    pub fn data(&self) -> &[Observation] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn check_input(&self, x: &[f64], output: usize) -> Result<()> {
        if x.len() != self.spec.input_dim() {
            return Err(contract(format!(
                "expected {}-dimensional input, got {}",
                self.spec.input_dim(),
                x.len()
            )));
        }
        if output >= self.spec.num_outputs() {
            return Err(contract(format!(
                "output index {output} out of range for {} outputs",
                self.spec.num_outputs()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(contract("input contains a non-finite coordinate"));
        }
        Ok(())
    }

    /// Adds one noisy observation to the model.
    pub fn condition(&mut self, obs: Observation) -> Result<()> {
        self.check_input(&obs.x, obs.output)?;
        if !obs.value.is_finite() {
            return Err(contract(format!("observation value must be finite, got {}", obs.value)));
        }
        let cross: Vec<f64> = self
            .data
            .iter()
            .map(|d| self.spec.eval_unchecked(&d.x, d.output, &obs.x, obs.output))
            .collect();
        let prior = self.spec.eval_unchecked(&obs.x, obs.output, &obs.x, obs.output);
        let diag = prior + self.spec.noise_variance(obs.output);
        let jitter = JITTER * self.spec.outputs[obs.output].variance;
        let v = self.factor.push(cross, diag, jitter)?;
        let n = self.whitened.len();
        let s: f64 = v.iter().zip(&self.whitened).map(|(a, b)| a * b).sum();
        self.whitened.push((obs.value - s) / self.factor.diag(n));
        self.data.push(obs);
        Ok(())
    }

    pub fn condition_all(&mut self, data: impl IntoIterator<Item = Observation>) -> Result<()> {
        for obs in data {
            self.condition(obs)?;
        }
        Ok(())
    }

    /// Posterior mean and variance of the surrogate at `(x, output)`.
    pub fn predict(&self, x: &[f64], output: usize) -> Result<Posterior> {
        self.check_input(x, output)?;
        Ok(self.predict_unchecked(x, output))
    }

    pub(crate) fn predict_unchecked(&self, x: &[f64], output: usize) -> Posterior {
        let prior = self.spec.eval_unchecked(x, output, x, output);
        if self.data.is_empty() {
            return Posterior {
                mean: 0.0,
                variance: prior,
            };
        }
        let mut v: Vec<f64> = self
            .data
            .iter()
            .map(|d| self.spec.eval_unchecked(&d.x, d.output, x, output))
            .collect();
        self.factor.forward_solve(&mut v);
        let mean: f64 = v.iter().zip(&self.whitened).map(|(a, b)| a * b).sum();
        let explained: f64 = v.iter().map(|a| a * a).sum();
        Posterior {
            mean,
            // roundoff can push the difference a few ulps below zero
            variance: (prior - explained).max(0.0),
        }
    }

    /// Posterior at many queries; each query is computed independently, so
    /// results do not depend on query order.
    pub fn predict_many(&self, queries: &[(Vec<f64>, usize)]) -> Result<Vec<Posterior>> {
        for (x, i) in queries {
            self.check_input(x, *i)?;
        }
        Ok(queries
            .par_iter()
            .map(|(x, i)| self.predict_unchecked(x, *i))
            .collect())
    }
}

/// Exact GP posterior at `queries` given `data`.
pub fn posterior(
    spec: &SurrogateKernelSpec,
    data: &[Observation],
    queries: &[(Vec<f64>, usize)],
) -> Result<Vec<Posterior>> {
    let model = GpModel::with_data(spec.clone(), data.iter().cloned())?;
    model.predict_many(queries)
}
