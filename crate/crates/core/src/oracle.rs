//! Brute-force reference computations over known truth tables: the safely
//! reachable set, its optimum, and a naive dense GP posterior.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::domain::ParameterDomain;
use crate::error::{contract, Error, Result};
use crate::gp::{Observation, Posterior, SurrogateKernelSpec};
use crate::optimizer::Lipschitz;

/// True function values on every domain point, indexed `[output][point]`
/// with output 0 the performance function.
///
/// Only synthetic benchmarks can provide one; there is no way to build it
/// from a live evaluator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    values: Vec<Vec<f64>>,
}

impl GroundTruth {
    pub fn new(values: Vec<Vec<f64>>) -> Result<Self> {
        let n = values.first().map(Vec::len).unwrap_or(0);
        if n == 0 {
            return Err(contract("truth tables must be non-empty"));
        }
        if values.iter().any(|v| v.len() != n) {
            return Err(contract("every truth table needs one value per domain point"));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(contract("truth tables must be finite"));
        }
        Ok(Self { values })
    }

    pub fn num_outputs(&self) -> usize {
        self.values.len()
    }

    pub fn num_points(&self) -> usize {
        self.values[0].len()
    }

    pub fn value(&self, output: usize, point: usize) -> f64 {
        self.values[output][point]
    }

    pub fn table(&self, output: usize) -> &[f64] {
        &self.values[output]
    }

    /// Every constraint non-negative at `point`.
    pub fn is_safe(&self, point: usize) -> bool {
        (1..self.num_outputs()).all(|i| self.values[i][point] >= 0.0)
    }
}

fn check(set: &[usize], truth: &GroundTruth, domain: &ParameterDomain, lip: &Lipschitz, eps: f64) -> Result<()> {
    if truth.num_points() != domain.len() {
        return Err(contract("truth tables and domain differ in size"));
    }
    if let Some(a) = set.iter().find(|a| **a >= domain.len()) {
        return Err(contract(format!("index {a} outside the domain")));
    }
    if !(eps >= 0.0) {
        return Err(contract("epsilon must be non-negative"));
    }
    lip.validate(truth.num_outputs() - 1)
}

/// `R_eps(S) = S ∪ ∩_{i>=1} {a : exists a' in S, g_i(a') - eps - L_i d(a', a) >= 0}`.
pub fn reach_operator(
    set: &[usize],
    truth: &GroundTruth,
    domain: &ParameterDomain,
    lipschitz: &Lipschitz,
    epsilon: f64,
) -> Result<Vec<usize>> {
    check(set, truth, domain, lipschitz, epsilon)?;
    let q = truth.num_outputs() - 1;
    let mut out = Vec::new();
    for a in 0..domain.len() {
        let member = set.contains(&a)
            || (1..=q).all(|i| {
                set.iter().any(|&b| {
                    truth.value(i, b) - epsilon - lipschitz.get(i) * domain.distance(b, a) >= 0.0
                })
            });
        if member {
            out.push(a);
        }
    }
    Ok(out)
}

/// Repeated application of [`reach_operator`] until nothing changes.
pub fn reach_closure(
    seed: &[usize],
    truth: &GroundTruth,
    domain: &ParameterDomain,
    lipschitz: &Lipschitz,
    epsilon: f64,
) -> Result<Vec<usize>> {
    if seed.is_empty() {
        return Err(contract("seed set must be non-empty"));
    }
    let mut current: Vec<usize> = seed.to_vec();
    current.sort_unstable();
    current.dedup();
    loop {
        let next = reach_operator(&current, truth, domain, lipschitz, epsilon)?;
        if next == current {
            return Ok(current);
        }
        current = next;
    }
}

/// `f*_eps`: the largest performance value over the reachable closure.
pub fn baseline_optimum(
    seed: &[usize],
    truth: &GroundTruth,
    domain: &ParameterDomain,
    lipschitz: &Lipschitz,
    epsilon: f64,
) -> Result<f64> {
    let closure = reach_closure(seed, truth, domain, lipschitz, epsilon)?;
    Ok(closure
        .iter()
        .map(|&a| truth.value(0, a))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// GP posterior through an explicit inverse of `K + diag(noise)`. No jitter:
/// a singular matrix is an error.
pub fn dense_posterior(
    spec: &SurrogateKernelSpec,
    data: &[Observation],
    queries: &[(Vec<f64>, usize)],
) -> Result<Vec<Posterior>> {
    spec.validate()?;
    let dim = spec.input_dim();
    let q1 = spec.num_outputs();
    for (x, i) in data.iter().map(|o| (&o.x, o.output)).chain(queries.iter().map(|(x, i)| (x, *i))) {
        if x.len() != dim || i >= q1 {
            return Err(contract("input dimension or output index does not match the kernel"));
        }
    }
    let n = data.len();
    let k = DMatrix::from_fn(n, n, |r, c| {
        let v = spec.eval_unchecked(&data[r].x, data[r].output, &data[c].x, data[c].output);
        if r == c {
            v + spec.noise_variance(data[r].output)
        } else {
            v
        }
    });
    let k_inv = k
        .try_inverse()
        .ok_or_else(|| Error::Numerical("dense Gram matrix is singular".into()))?;
    let y = DVector::from_iterator(n, data.iter().map(|o| o.value));
    let alpha = &k_inv * y;
    Ok(queries
        .iter()
        .map(|(x, i)| {
            let ks = DVector::from_iterator(n, data.iter().map(|o| spec.eval_unchecked(&o.x, o.output, x, *i)));
            let prior = spec.eval_unchecked(x, *i, x, *i);
            Posterior {
                mean: ks.dot(&alpha),
                variance: (prior - ks.dot(&(&k_inv * &ks))).max(0.0),
            }
        })
        .collect())
}
