use serde::{Deserialize, Serialize};

use super::beta::BetaSchedule;
use super::confidence::{ConfidenceState, IntervalUpdate, MisspecificationEvent};
use super::sets::{self, Lipschitz, SafeSetMode, SafeSets, Selection};
use super::trace::{EntryStatus, RunTrace, TraceEntry};
use crate::domain::ParameterDomain;
use crate::error::{contract, Error, Result};
use crate::gp::{GpModel, Observation, Posterior, SurrogateKernelSpec};

pub type BoxError = Box<dyn std::error::Error + Send + Sync>;

/// Evaluates the system at a parameter vector and returns noisy measurements
/// of all outputs, performance first.
pub trait Objective {
    fn evaluate(&mut self, params: &[f64], context: Option<&[f64]>) -> Result<Vec<f64>, BoxError>;
}

/// Adapter that turns a closure into an [`Objective`].
pub struct FnObjective<F>(pub F);

impl<F> Objective for FnObjective<F>
where
    F: FnMut(&[f64], Option<&[f64]>) -> Result<Vec<f64>, BoxError>,
{
    fn evaluate(&mut self, params: &[f64], context: Option<&[f64]>) -> Result<Vec<f64>, BoxError> {
        (self.0)(params, context)
    }
}

/// Wraps a closure as an [`Objective`].
pub fn objective_fn<F>(f: F) -> FnObjective<F>
where
    F: FnMut(&[f64], Option<&[f64]>) -> Result<Vec<f64>, BoxError>,
{
    FnObjective(f)
}

impl<T: Objective + ?Sized> Objective for &mut T {
    fn evaluate(&mut self, params: &[f64], context: Option<&[f64]>) -> Result<Vec<f64>, BoxError> {
        (**self).evaluate(params, context)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgoConfig {
    pub mode: SafeSetMode,
    /// Required in Lipschitz mode. In GP-direct mode it only drives the
    /// expanders; without it the expander set is empty.
    pub lipschitz: Option<Lipschitz>,
    /// Stop once every candidate's selection score is below this value.
    pub epsilon: f64,
    pub beta: BetaSchedule,
    /// Divide widths by each output's prior std before selection.
    pub per_output_scaling: bool,
}

impl AlgoConfig {
    pub fn validate(&self, num_constraints: usize) -> Result<()> {
        self.beta.validate()?;
        if !(self.epsilon >= 0.0) {
            return Err(contract(format!("epsilon must be non-negative, got {}", self.epsilon)));
        }
        match (&self.lipschitz, self.mode) {
            (None, SafeSetMode::Lipschitz) => Err(contract("Lipschitz mode needs a Lipschitz constant")),
            (Some(l), _) => l.validate(num_constraints),
            (None, SafeSetMode::GpDirect) => Ok(()),
        }
    }

    fn interval_update(&self) -> IntervalUpdate {
        match self.mode {
            SafeSetMode::Lipschitz => IntervalUpdate::Intersect,
            SafeSetMode::GpDirect => IntervalUpdate::Replace,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIterations,
    /// Every candidate's width fell below epsilon.
    Converged,
    NoCandidates,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub stop: StopReason,
    /// Best estimate using every observation gathered.
    pub best: usize,
    pub best_lower: f64,
}

#[derive(Debug, Clone)]
struct Pending {
    iteration: usize,
    selection: Selection,
    best: usize,
}

/// SafeOpt-MC over a finite domain, optionally restricted to one context slice.
#[derive(Debug, Clone)]
pub struct SafeOpt {
    domain: ParameterDomain,
    config: AlgoConfig,
    model: GpModel,
    context: Option<Vec<f64>>,
    seed: Vec<usize>,
    /// `S_{n-1}` for the next set computation.
    previous_safe: Vec<usize>,
    confidence: ConfidenceState,
    /// Sets for iteration `n + 1`, once computed.
    sets: Option<SafeSets>,
    pending: Option<Pending>,
    excluded: Vec<bool>,
    n: usize,
    trace: RunTrace,
    events: Vec<MisspecificationEvent>,
    prior_std: Vec<f64>,
}

impl SafeOpt {
    /// Non-contextual optimizer. `seed` is `S_0`, a non-empty set of domain
    /// indices known to satisfy every constraint.
    pub fn new(
        domain: ParameterDomain,
        kernel: SurrogateKernelSpec,
        seed: Vec<usize>,
        config: AlgoConfig,
    ) -> Result<Self> {
        if kernel.context.is_some() {
            return Err(contract("kernel has a context factor; use SafeOpt::contextual"));
        }
        Self::build(domain, kernel, seed, config, None)
    }

    /// Optimizer over the slice `{(a, context) : a in domain}` of a model with
    /// a context kernel factor.
    pub fn contextual(
        domain: ParameterDomain,
        kernel: SurrogateKernelSpec,
        seed: Vec<usize>,
        config: AlgoConfig,
        context: Vec<f64>,
    ) -> Result<Self> {
        if kernel.context_dim() == 0 {
            return Err(contract("contextual optimizer needs a context kernel"));
        }
        if context.len() != kernel.context_dim() || context.iter().any(|v| !v.is_finite()) {
            return Err(contract(format!(
                "context must have {} finite coordinates",
                kernel.context_dim()
            )));
        }
        Self::build(domain, kernel, seed, config, Some(context))
    }

    fn build(
        domain: ParameterDomain,
        kernel: SurrogateKernelSpec,
        mut seed: Vec<usize>,
        config: AlgoConfig,
        context: Option<Vec<f64>>,
    ) -> Result<Self> {
        kernel.validate()?;
        if kernel.param_dim() != domain.dim() {
            return Err(contract(format!(
                "kernel parameter dimension {} differs from domain dimension {}",
                kernel.param_dim(),
                domain.dim()
            )));
        }
        let q1 = kernel.num_outputs();
        config.validate(q1 - 1)?;
        seed.sort_unstable();
        seed.dedup();
        if seed.is_empty() {
            return Err(contract("the seed set S_0 must be non-empty"));
        }
        let confidence = ConfidenceState::initial(domain.len(), q1, &seed)?;
        let trace = RunTrace::new(domain.dim(), kernel.context_dim(), q1);
        let prior_std = (0..q1)
            .map(|i| {
                let ctx = kernel.context.as_ref().map_or(1.0, |k| k.prior_std());
                kernel.prior_std(i) * ctx
            })
            .collect();
        Ok(Self {
            excluded: vec![false; domain.len()],
            model: GpModel::new(kernel)?,
            previous_safe: seed.clone(),
            domain,
            config,
            context,
            seed,
            confidence,
            sets: None,
            pending: None,
            n: 0,
            trace,
            events: Vec::new(),
            prior_std,
        })
    }

    pub fn domain(&self) -> &ParameterDomain {
        &self.domain
    }

    pub fn config(&self) -> &AlgoConfig {
        &self.config
    }

    pub fn model(&self) -> &GpModel {
        &self.model
    }

    pub fn context(&self) -> Option<&[f64]> {
        self.context.as_deref()
    }

    pub fn seed(&self) -> &[usize] {
        &self.seed
    }

    /// Iterations executed so far, including failed evaluations.
    pub fn iteration(&self) -> usize {
        self.n
    }

    pub fn trace(&self) -> &RunTrace {
        &self.trace
    }

    pub fn into_trace(self) -> RunTrace {
        self.trace
    }

    pub fn misspecification_events(&self) -> &[MisspecificationEvent] {
        &self.events
    }

    /// Confidence intervals from the last set computation.
    pub fn confidence(&self) -> &ConfidenceState {
        &self.confidence
    }

    /// Model input for domain point `a` in the current slice.
    pub fn input(&self, a: usize) -> Vec<f64> {
        let mut x = self.domain.point(a).to_vec();
        if let Some(z) = &self.context {
            x.extend_from_slice(z);
        }
        x
    }

    fn posteriors(&self) -> Vec<Vec<Posterior>> {
        let q1 = self.model.spec().num_outputs();
        let inputs: Vec<Vec<f64>> = (0..self.domain.len()).map(|a| self.input(a)).collect();
        (0..q1)
            .map(|i| {
                use rayon::prelude::*;
                inputs.par_iter().map(|x| self.model.predict_unchecked(x, i)).collect()
            })
            .collect()
    }

    /// Updates the confidence intervals and computes `S`, `M`, `G` for
    /// iteration `n + 1`. Calling it again before the next observation is a
    /// no-op.
    pub fn refresh(&mut self) -> Result<&SafeSets> {
        if self.sets.is_none() {
            let next = self.n + 1;
            let q1 = self.model.spec().num_outputs();
            let sqrt_beta = self.config.beta.sqrt_beta(next, self.domain.len(), q1)?;
            let post = self.posteriors();
            let events = self
                .confidence
                .update(&post, sqrt_beta, self.config.interval_update(), next)?;
            self.events.extend(events);
            let safe = sets::safe_set(
                &self.confidence,
                &self.domain,
                self.config.mode,
                &self.previous_safe,
                &self.seed,
                self.config.lipschitz.as_ref(),
            )?;
            let maximizers = sets::maximizers(&self.confidence, &safe)?;
            let (expanders, expander_scores) = match &self.config.lipschitz {
                Some(l) => sets::expanders(&self.confidence, &self.domain, &safe, l)?,
                None => (Vec::new(), vec![0; self.domain.len()]),
            };
            self.sets = Some(SafeSets {
                safe,
                maximizers,
                expanders,
                expander_scores,
            });
        }
        Ok(self.sets.as_ref().expect("sets computed above"))
    }

    /// Sets for the upcoming iteration.
    pub fn sets(&mut self) -> Result<&SafeSets> {
        self.refresh()
    }

    /// `argmax_{S} l_0` for the upcoming iteration, with its lower bound.
    pub fn best_estimate(&mut self) -> Result<(usize, f64)> {
        self.refresh()?;
        let safe = &self.sets.as_ref().expect("refreshed").safe;
        let best = sets::best_estimate(&self.confidence, safe)?;
        Ok((best, self.confidence.lower(0, best)))
    }

    /// Proposes the next point without evaluating it.
    pub fn ask(&mut self) -> Result<Selection> {
        self.refresh()?;
        let s = self.sets.as_ref().expect("refreshed");
        let scaling = self.config.per_output_scaling.then_some(self.prior_std.as_slice());
        let selection = sets::select_next(&self.confidence, &s.candidates(), scaling, Some(&self.excluded), self.n + 1)?;
        let best = sets::best_estimate(&self.confidence, &s.safe)?;
        self.pending = Some(Pending {
            iteration: self.n + 1,
            selection,
            best,
        });
        Ok(selection)
    }

    /// Records the outcome of evaluating the last proposal.
    ///
    /// `Ok` values are conditioned into the model, one row per output. On
    /// `Err` the iteration is recorded as failed, the point is excluded from
    /// later selection, and the error is returned as [`Error::Evaluation`].
    pub fn tell(&mut self, outcome: Result<Vec<f64>, BoxError>) -> Result<()> {
        let pending = self
            .pending
            .take()
            .ok_or_else(|| contract("tell called without a pending proposal"))?;
        let q1 = self.model.spec().num_outputs();
        let a = pending.selection.point;
        let checked = outcome.map_err(|e| e.to_string()).and_then(|v| {
            if v.len() != q1 {
                Err(format!("evaluator returned {} values, expected {q1}", v.len()))
            } else if v.iter().any(|y| !y.is_finite()) {
                Err(format!("evaluator returned non-finite values {v:?}"))
            } else {
                Ok(v)
            }
        });
        let (observations, status, failure) = match checked {
            Ok(v) => {
                let x = self.input(a);
                for (i, y) in v.iter().enumerate() {
                    self.model.condition(Observation::new(x.clone(), i, *y))?;
                }
                (v, EntryStatus::Ok, None)
            }
            Err(msg) => {
                self.excluded[a] = true;
                (vec![f64::NAN; q1], EntryStatus::Failed, Some(msg))
            }
        };
        let s = self.sets.take().expect("sets exist while a proposal is pending");
        let entry = TraceEntry {
            n: pending.iteration,
            point: a,
            params: self.domain.point(a).to_vec(),
            context: self.context.clone().unwrap_or_default(),
            output: pending.selection.output,
            width: pending.selection.width,
            score: pending.selection.score,
            observations,
            safe_size: s.safe.len(),
            maximizers: s.maximizers.len(),
            expanders: s.expanders.len(),
            best: pending.best,
            best_params: self.domain.point(pending.best).to_vec(),
            best_lower: self.confidence.lower(0, pending.best),
            status,
        };
        self.trace.push(entry)?;
        self.previous_safe = s.safe;
        self.n = pending.iteration;
        match failure {
            None => Ok(()),
            Some(message) => Err(Error::Evaluation { point: a, message }),
        }
    }

    /// One iteration: select, evaluate, condition.
    pub fn step<O: Objective + ?Sized>(&mut self, objective: &mut O) -> Result<&TraceEntry> {
        let sel = self.ask()?;
        let params = self.domain.point(sel.point).to_vec();
        let outcome = objective.evaluate(&params, self.context.as_deref());
        self.tell(outcome)?;
        Ok(self.trace.last().expect("tell appended an entry"))
    }

    /// Runs until `max_iterations` further iterations are done, the largest
    /// candidate score drops below epsilon, or no candidate is left.
    /// Evaluator failures abort the run with the error.
    pub fn run<O: Objective + ?Sized>(&mut self, objective: &mut O, max_iterations: usize) -> Result<RunOutcome> {
        let mut stop = StopReason::MaxIterations;
        for _ in 0..max_iterations {
            match self.ask() {
                Ok(sel) if sel.score < self.config.epsilon => {
                    self.pending = None;
                    stop = StopReason::Converged;
                    break;
                }
                Ok(sel) => {
                    let params = self.domain.point(sel.point).to_vec();
                    let outcome = objective.evaluate(&params, self.context.as_deref());
                    self.tell(outcome)?;
                }
                Err(Error::NoCandidates { .. }) => {
                    stop = StopReason::NoCandidates;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        let (best, best_lower) = self.best_estimate()?;
        Ok(RunOutcome { stop, best, best_lower })
    }

    /// Conditions the model on existing data without recording iterations.
    pub fn add_observations(&mut self, data: impl IntoIterator<Item = Observation>) -> Result<()> {
        self.model.condition_all(data)?;
        self.sets = None;
        self.pending = None;
        Ok(())
    }

    /// Moves the optimizer to another context slice.
    ///
    /// The model keeps all data. The new seed is every parameter whose GP
    /// lower bounds certify all constraints at `z`, and the confidence state
    /// restarts from it. Fixing the current context changes nothing.
    pub fn fix_context(&mut self, z: &[f64]) -> Result<()> {
        let current = self
            .context
            .as_ref()
            .ok_or_else(|| contract("optimizer has no context dimension"))?;
        if z.len() != current.len() || z.iter().any(|v| !v.is_finite()) {
            return Err(contract(format!("context must have {} finite coordinates", current.len())));
        }
        if current.as_slice() == z {
            return Ok(());
        }
        let q1 = self.model.spec().num_outputs();
        let sqrt_beta = self.config.beta.sqrt_beta(self.n + 1, self.domain.len(), q1)?;
        let previous = self.context.replace(z.to_vec());
        let post = self.posteriors();
        let seed: Vec<usize> = (0..self.domain.len())
            .filter(|&a| (1..q1).all(|i| post[i][a].mean - sqrt_beta * post[i][a].std() >= 0.0))
            .collect();
        if seed.is_empty() {
            self.context = previous;
            return Err(Error::NoSafeSeed { context: z.to_vec() });
        }
        self.confidence = ConfidenceState::initial(self.domain.len(), q1, &seed)?;
        self.previous_safe = seed.clone();
        self.seed = seed;
        self.excluded = vec![false; self.domain.len()];
        self.sets = None;
        self.pending = None;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{GridAxis, Metric};
    use crate::gp::KernelSpec;

    fn setup(mode: SafeSetMode) -> SafeOpt {
        let domain = ParameterDomain::grid(&[GridAxis::new(0.0, 1.0, 21)], Metric::Euclidean).unwrap();
        let kernel = SurrogateKernelSpec::independent(
            vec![
                KernelSpec::matern32(1.0, vec![0.2]).unwrap(),
                KernelSpec::matern32(1.0, vec![0.2]).unwrap(),
            ],
            vec![0.05, 0.05],
        )
        .unwrap();
        let config = AlgoConfig {
            mode,
            lipschitz: Some(Lipschitz::Uniform(5.0)),
            epsilon: 0.0,
            beta: BetaSchedule::Constant { sqrt_beta: 2.0 },
            per_output_scaling: false,
        };
        SafeOpt::new(domain, kernel, vec![10], config).unwrap()
    }

    fn truth(p: &[f64]) -> Vec<f64> {
        let x = p[0];
        vec![(-(x - 0.7f64).powi(2) * 20.0).exp(), 0.8 - (x - 0.5).abs() * 2.0]
    }

    #[test]
    fn selections_stay_in_the_safe_set() {
        for mode in [SafeSetMode::Lipschitz, SafeSetMode::GpDirect] {
            let mut opt = setup(mode);
            let mut obj = objective_fn(|p: &[f64], _: Option<&[f64]>| Ok(truth(p)));
            for _ in 0..10 {
                let safe = opt.sets().unwrap().safe.clone();
                let e = opt.step(&mut obj).unwrap();
                assert!(safe.contains(&e.point));
            }
            assert_eq!(opt.trace().len(), 10);
        }
    }

    #[test]
    fn failed_evaluation_is_recorded_and_excluded() {
        let mut opt = setup(SafeSetMode::Lipschitz);
        let mut obj = objective_fn(|_: &[f64], _: Option<&[f64]>| Err("sensor dropout".into()));
        let err = opt.step(&mut obj).unwrap_err();
        assert!(matches!(err, Error::Evaluation { point: 10, .. }));
        assert_eq!(opt.trace().len(), 1);
        assert_eq!(opt.trace().entries()[0].status, EntryStatus::Failed);
        assert_eq!(opt.iteration(), 1);
        // the only safe point is now excluded
        assert!(matches!(opt.ask(), Err(Error::NoCandidates { iteration: 2 })));
    }

    #[test]
    fn wrong_number_of_outputs_is_a_failure() {
        let mut opt = setup(SafeSetMode::GpDirect);
        let mut obj = objective_fn(|_: &[f64], _: Option<&[f64]>| Ok(vec![1.0]));
        assert!(matches!(opt.step(&mut obj), Err(Error::Evaluation { .. })));
    }

    #[test]
    fn convergence_stop() {
        let mut opt = setup(SafeSetMode::GpDirect);
        opt.config.epsilon = 10.0;
        let mut obj = objective_fn(|p: &[f64], _: Option<&[f64]>| Ok(truth(p)));
        let out = opt.run(&mut obj, 5).unwrap();
        assert_eq!(out.stop, StopReason::Converged);
        assert!(opt.trace().is_empty());
    }

    #[test]
    fn tell_without_ask() {
        let mut opt = setup(SafeSetMode::GpDirect);
        assert!(opt.tell(Ok(vec![0.0, 0.0])).is_err());
    }

    #[test]
    fn refresh_is_idempotent() {
        let mut opt = setup(SafeSetMode::Lipschitz);
        let a = opt.sets().unwrap().clone();
        let c = opt.confidence().clone();
        let b = opt.sets().unwrap().clone();
        assert_eq!(a, b);
        assert_eq!(&c, opt.confidence());
    }
}
