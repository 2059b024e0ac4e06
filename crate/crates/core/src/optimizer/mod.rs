//! SafeOpt-MC: confidence intervals, set construction, selection, and the
//! optimization loop.

mod beta;
mod confidence;
mod safeopt;
mod sets;
mod trace;
mod ucb;

pub use beta::{beta, BetaSchedule, PiRule};
pub use confidence::{ConfidenceState, IntervalUpdate, MisspecificationEvent};
pub use safeopt::{objective_fn, AlgoConfig, BoxError, FnObjective, Objective, RunOutcome, SafeOpt, StopReason};
pub use sets::{best_estimate, expanders, maximizers, safe_set, select_next, Lipschitz, SafeSetMode, SafeSets, Selection};
pub use trace::{EntryStatus, RunTrace, TraceEntry};
pub use ucb::{gp_ucb_select, GpUcb};

/// Free-function form of [`ConfidenceState::update`].
pub fn update_confidence(
    state: &ConfidenceState,
    posteriors: &[Vec<crate::gp::Posterior>],
    sqrt_beta: f64,
    rule: IntervalUpdate,
    iteration: usize,
) -> crate::Result<(ConfidenceState, Vec<MisspecificationEvent>)> {
    let mut next = state.clone();
    let events = next.update(posteriors, sqrt_beta, rule, iteration)?;
    Ok((next, events))
}
