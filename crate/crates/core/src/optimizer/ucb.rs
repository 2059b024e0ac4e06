//! GP-UCB on the performance output alone, ignoring every constraint.
//! Used as the unsafe comparison for SafeOpt.

use rayon::prelude::*;

use super::beta::BetaSchedule;
use super::safeopt::{BoxError, Objective};
use super::trace::{EntryStatus, RunTrace, TraceEntry};
use crate::domain::ParameterDomain;
use crate::error::{contract, Error, Result};
use crate::gp::{GpModel, Observation, SurrogateKernelSpec};

fn with_context(p: &[f64], context: Option<&[f64]>) -> Vec<f64> {
    let mut x = p.to_vec();
    if let Some(z) = context {
        x.extend_from_slice(z);
    }
    x
}

/// `argmax_a mu(a) + sqrt(beta) sigma(a)` for output 0 over the whole domain,
/// first in domain order on ties.
pub fn gp_ucb_select(
    model: &GpModel,
    beta: f64,
    domain: &ParameterDomain,
    context: Option<&[f64]>,
) -> Result<usize> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(contract(format!("beta must be finite and non-negative, got {beta}")));
    }
    if domain.dim() + context.map_or(0, <[f64]>::len) != model.spec().input_dim() {
        return Err(contract("domain and context do not match the model input dimension"));
    }
    let sb = beta.sqrt();
    let ucb: Vec<f64> = domain
        .points()
        .par_iter()
        .map(|p| {
            let post = model.predict_unchecked(&with_context(p, context), 0);
            post.mean + sb * post.std()
        })
        .collect();
    let mut best = 0;
    for (a, v) in ucb.iter().enumerate() {
        if *v > ucb[best] {
            best = a;
        }
    }
    Ok(best)
}

/// Sequential GP-UCB runner with the same trace layout as SafeOpt. The set
/// size columns are zero and `best` is the posterior-mean maximizer.
#[derive(Debug, Clone)]
pub struct GpUcb {
    domain: ParameterDomain,
    model: GpModel,
    beta: BetaSchedule,
    context: Option<Vec<f64>>,
    trace: RunTrace,
}

impl GpUcb {
    pub fn new(domain: ParameterDomain, kernel: SurrogateKernelSpec, beta: BetaSchedule) -> Result<Self> {
        beta.validate()?;
        if kernel.context.is_some() || kernel.param_dim() != domain.dim() {
            return Err(contract("kernel must be non-contextual with the domain's dimension"));
        }
        let trace = RunTrace::new(domain.dim(), 0, kernel.num_outputs());
        Ok(Self {
            domain,
            model: GpModel::new(kernel)?,
            beta,
            context: None,
            trace,
        })
    }

    pub fn model(&self) -> &GpModel {
        &self.model
    }

    pub fn trace(&self) -> &RunTrace {
        &self.trace
    }

    pub fn into_trace(self) -> RunTrace {
        self.trace
    }

    pub fn step<O: Objective + ?Sized>(&mut self, objective: &mut O) -> Result<&TraceEntry> {
        let n = self.trace.len() + 1;
        let q1 = self.model.spec().num_outputs();
        let beta = self.beta.beta(n, self.domain.len(), q1)?;
        let ctx = self.context.as_deref();
        let a = gp_ucb_select(&self.model, beta, &self.domain, ctx)?;
        let x = with_context(self.domain.point(a), ctx);
        let post = self.model.predict_unchecked(&x, 0);
        let best = self.mean_maximizer();
        let best_post = self.model.predict_unchecked(&with_context(self.domain.point(best), ctx), 0);
        let outcome: Result<Vec<f64>, BoxError> = objective.evaluate(self.domain.point(a), ctx);
        let (observations, status, failure) = match outcome {
            Ok(v) if v.len() == q1 && v.iter().all(|y| y.is_finite()) => {
                self.model.condition(Observation::new(x, 0, v[0]))?;
                (v, EntryStatus::Ok, None)
            }
            Ok(v) => (vec![f64::NAN; q1], EntryStatus::Failed, Some(format!("invalid evaluator output {v:?}"))),
            Err(e) => (vec![f64::NAN; q1], EntryStatus::Failed, Some(e.to_string())),
        };
        let width = 2.0 * beta.sqrt() * post.std();
        self.trace.push(TraceEntry {
            n,
            point: a,
            params: self.domain.point(a).to_vec(),
            context: Vec::new(),
            output: 0,
            width,
            score: width,
            observations,
            safe_size: 0,
            maximizers: 0,
            expanders: 0,
            best,
            best_params: self.domain.point(best).to_vec(),
            best_lower: best_post.mean - beta.sqrt() * best_post.std(),
            status,
        })?;
        match failure {
            None => Ok(self.trace.last().expect("entry pushed")),
            Some(message) => Err(Error::Evaluation { point: a, message }),
        }
    }

    pub fn run<O: Objective + ?Sized>(&mut self, objective: &mut O, iterations: usize) -> Result<()> {
        for _ in 0..iterations {
            self.step(objective)?;
        }
        Ok(())
    }

    /// Posterior-mean maximizer of the performance output.
    pub fn mean_maximizer(&self) -> usize {
        let ctx = self.context.as_deref();
        let means: Vec<f64> = self
            .domain
            .points()
            .iter()
            .map(|p| self.model.predict_unchecked(&with_context(p, ctx), 0).mean)
            .collect();
        let mut best = 0;
        for (a, m) in means.iter().enumerate() {
            if *m > means[best] {
                best = a;
            }
        }
        best
    }
}
