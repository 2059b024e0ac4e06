//! Safe set, maximizers, expanders, and candidate selection.
//!
//! Index sets are sorted `Vec<usize>` of domain indices. Output 0 of the
//! confidence state is the performance function; outputs `1..` are the
//! constraints.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::confidence::ConfidenceState;
use crate::domain::ParameterDomain;
use crate::error::{contract, Error, Result};

/// Lipschitz constants of the constraint functions with respect to the
/// domain metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Lipschitz {
    Uniform(f64),
    /// One constant per constraint, in output order `1..=q`.
    PerConstraint(Vec<f64>),
}

impl Lipschitz {
    pub fn validate(&self, num_constraints: usize) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        match self {
            Lipschitz::Uniform(l) if !ok(*l) => {
                Err(contract(format!("Lipschitz constant must be positive, got {l}")))
            }
            Lipschitz::PerConstraint(ls) if ls.len() != num_constraints => Err(contract(format!(
                "expected {num_constraints} Lipschitz constants, got {}",
                ls.len()
            ))),
            Lipschitz::PerConstraint(ls) if !ls.iter().all(|l| ok(*l)) => {
                Err(contract("Lipschitz constants must be positive"))
            }
            _ => Ok(()),
        }
    }

    /// Constant for constraint output `output >= 1`.
    #[inline]
    pub fn get(&self, output: usize) -> f64 {
        match self {
            Lipschitz::Uniform(l) => *l,
            Lipschitz::PerConstraint(ls) => ls[output - 1],
        }
    }
}

/// How the safe set is certified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SafeSetMode {
    /// Lipschitz expansion from the previous safe set over contained
    /// intervals. This is the mode the safety guarantee applies to.
    Lipschitz,
    /// `S_0` plus every point whose GP lower bounds are all non-negative.
    #[default]
    GpDirect,
}

/// The sets computed for one iteration.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SafeSets {
    pub safe: Vec<usize>,
    pub maximizers: Vec<usize>,
    pub expanders: Vec<usize>,
    /// `e_n(a)` for every domain point; zero outside the safe set.
    pub expander_scores: Vec<usize>,
}

impl SafeSets {
    /// `M_n ∪ G_n`, sorted.
    pub fn candidates(&self) -> Vec<usize> {
        let mut c: Vec<usize> = self.maximizers.iter().chain(&self.expanders).copied().collect();
        c.sort_unstable();
        c.dedup();
        c
    }
}

/// The chosen `(a_n, i)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub point: usize,
    pub output: usize,
    /// Raw width `u - l`.
    pub width: f64,
    /// Width used for the argmax (divided by the prior std when scaling).
    pub score: f64,
}

pub(crate) fn mask(n: usize, set: &[usize]) -> Vec<bool> {
    let mut m = vec![false; n];
    for &a in set {
        m[a] = true;
    }
    m
}

fn check_shape(state: &ConfidenceState, domain: &ParameterDomain) -> Result<()> {
    if state.num_points() != domain.len() {
        return Err(contract(format!(
            "confidence state covers {} points, domain has {}",
            state.num_points(),
            domain.len()
        )));
    }
    Ok(())
}

fn check_indices(set: &[usize], n: usize, what: &str) -> Result<()> {
    if set.is_empty() {
        return Err(contract(format!("{what} must be non-empty")));
    }
    if let Some(a) = set.iter().find(|a| **a >= n) {
        return Err(contract(format!("{what} index {a} outside a domain of {n} points")));
    }
    Ok(())
}

/// `S_n`.
///
/// * Lipschitz: `∩_{i>=1} ∪_{a in S_{n-1}} {a' : l_i(a) - L_i d(a, a') >= 0}`,
///   together with `S_{n-1}` itself.
/// * GP-direct: `S_0 ∪ {a : l_i(a) >= 0 for all i >= 1}`.
pub fn safe_set(
    state: &ConfidenceState,
    domain: &ParameterDomain,
    mode: SafeSetMode,
    previous: &[usize],
    seed: &[usize],
    lipschitz: Option<&Lipschitz>,
) -> Result<Vec<usize>> {
    check_shape(state, domain)?;
    let n = domain.len();
    let q = state.num_outputs() - 1;
    check_indices(seed, n, "seed set")?;
    let mut keep = mask(n, seed);
    match mode {
        SafeSetMode::GpDirect => {
            let certified: Vec<bool> = (0..n)
                .into_par_iter()
                .map(|a| (1..=q).all(|i| state.lower(i, a) >= 0.0))
                .collect();
            for (k, c) in keep.iter_mut().zip(certified) {
                *k |= c;
            }
        }
        SafeSetMode::Lipschitz => {
            check_indices(previous, n, "previous safe set")?;
            let lip = lipschitz.ok_or_else(|| contract("Lipschitz mode needs Lipschitz constants"))?;
            lip.validate(q)?;
            let reached: Vec<bool> = (0..n)
                .into_par_iter()
                .map(|b| {
                    (1..=q).all(|i| {
                        let l = lip.get(i);
                        previous
                            .iter()
                            .any(|&a| state.lower(i, a) - l * domain.distance(a, b) >= 0.0)
                    })
                })
                .collect();
            for (k, r) in keep.iter_mut().zip(reached) {
                *k |= r;
            }
            for &a in previous {
                keep[a] = true;
            }
        }
    }
    Ok((0..n).filter(|&a| keep[a]).collect())
}

/// `M_n = {a in S_n : u_0(a) >= max_{a' in S_n} l_0(a')}`.
pub fn maximizers(state: &ConfidenceState, safe: &[usize]) -> Result<Vec<usize>> {
    check_indices(safe, state.num_points(), "safe set")?;
    let best = safe
        .iter()
        .map(|&a| state.lower(0, a))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(safe.iter().copied().filter(|&a| state.upper(0, a) >= best).collect())
}

/// `G_n = {a in S_n : e_n(a) >= 1}` with
/// `e_n(a) = |{a' not in S_n : exists i >= 1, u_i(a) - L_i d(a, a') >= 0}|`.
///
/// Returns the set and the score of every domain point.
pub fn expanders(
    state: &ConfidenceState,
    domain: &ParameterDomain,
    safe: &[usize],
    lipschitz: &Lipschitz,
) -> Result<(Vec<usize>, Vec<usize>)> {
    check_shape(state, domain)?;
    let n = domain.len();
    check_indices(safe, n, "safe set")?;
    let q = state.num_outputs() - 1;
    lipschitz.validate(q)?;
    let inside = mask(n, safe);
    let outside: Vec<usize> = (0..n).filter(|&b| !inside[b]).collect();
    let safe_scores: Vec<usize> = safe
        .par_iter()
        .map(|&a| {
            outside
                .iter()
                .filter(|&&b| {
                    let d = domain.distance(a, b);
                    (1..=q).any(|i| state.upper(i, a) - lipschitz.get(i) * d >= 0.0)
                })
                .count()
        })
        .collect();
    let mut scores = vec![0; n];
    let mut set = Vec::new();
    for (&a, s) in safe.iter().zip(safe_scores) {
        scores[a] = s;
        if s >= 1 {
            set.push(a);
        }
    }
    Ok((set, scores))
}

/// `argmax_{a in candidates, i} w(a, i)`, skipping `excluded` points.
///
/// With `prior_std` set, widths are divided by the prior standard deviation
/// of their output before comparison. Ties go to the earlier domain point,
/// then the lower output index.
pub fn select_next(
    state: &ConfidenceState,
    candidates: &[usize],
    prior_std: Option<&[f64]>,
    excluded: Option<&[bool]>,
    iteration: usize,
) -> Result<Selection> {
    let q1 = state.num_outputs();
    if let Some(s) = prior_std {
        if s.len() != q1 || s.iter().any(|v| !(*v > 0.0)) {
            return Err(contract("prior_std needs one positive entry per output"));
        }
    }
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut best: Option<Selection> = None;
    for a in sorted {
        if a >= state.num_points() {
            return Err(contract(format!("candidate {a} outside the domain")));
        }
        if excluded.is_some_and(|e| e[a]) {
            continue;
        }
        for i in 0..q1 {
            let width = state.width(i, a);
            let score = prior_std.map_or(width, |s| width / s[i]);
            if best.is_none_or(|b| score > b.score) {
                best = Some(Selection {
                    point: a,
                    output: i,
                    width,
                    score,
                });
            }
        }
    }
    best.ok_or(Error::NoCandidates { iteration })
}

/// `argmax_{a in S_n} l_0(a)`, first in domain order on ties.
pub fn best_estimate(state: &ConfidenceState, safe: &[usize]) -> Result<usize> {
    check_indices(safe, state.num_points(), "safe set")?;
    let mut sorted = safe.to_vec();
    sorted.sort_unstable();
    let mut best = sorted[0];
    for &a in &sorted[1..] {
        if state.lower(0, a) > state.lower(0, best) {
            best = a;
        }
    }
    Ok(best)
}
