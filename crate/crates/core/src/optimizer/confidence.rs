//! Per-(point, output) confidence intervals.

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::gp::Posterior;

/// How new GP intervals combine with the previous ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalUpdate {
    /// `C_n = C_{n-1} ∩ Q_n`, so intervals are nested across iterations.
    Intersect,
    /// `C_n = Q_n`.
    Replace,
}

/// The new GP interval did not overlap the previous one, which means the
/// model is misspecified for this point (usually beta is too small).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MisspecificationEvent {
    pub iteration: usize,
    pub point: usize,
    pub output: usize,
    pub previous: (f64, f64),
    pub gp_interval: (f64, f64),
}

/// Intervals `[lower, upper]` for every output `i` and domain point `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceState {
    lower: Vec<Vec<f64>>,
    upper: Vec<Vec<f64>>,
    iteration: usize,
}

impl ConfidenceState {
    /// `C_0`: `[0, inf)` for the constraint outputs at seed points, the whole
    /// real line everywhere else.
    pub fn initial(num_points: usize, num_outputs: usize, seed: &[usize]) -> Result<Self> {
        let mut lower = vec![vec![f64::NEG_INFINITY; num_points]; num_outputs];
        let upper = vec![vec![f64::INFINITY; num_points]; num_outputs];
        for &a in seed {
            if a >= num_points {
                return Err(contract(format!("seed index {a} outside a domain of {num_points} points")));
            }
            for row in lower.iter_mut().skip(1) {
                row[a] = 0.0;
            }
        }
        Ok(Self {
            lower,
            upper,
            iteration: 0,
        })
    }

    pub fn num_outputs(&self) -> usize {
        self.lower.len()
    }

    pub fn num_points(&self) -> usize {
        self.lower.first().map_or(0, Vec::len)
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    #[inline]
    pub fn lower(&self, output: usize, point: usize) -> f64 {
        self.lower[output][point]
    }

    #[inline]
    pub fn upper(&self, output: usize, point: usize) -> f64 {
        self.upper[output][point]
    }

    #[inline]
    pub fn width(&self, output: usize, point: usize) -> f64 {
        self.upper[output][point] - self.lower[output][point]
    }

    pub fn lower_bounds(&self, output: usize) -> &[f64] {
        &self.lower[output]
    }

    pub fn upper_bounds(&self, output: usize) -> &[f64] {
        &self.upper[output]
    }

    /// Builds a state directly from bound tables indexed `[output][point]`.
    pub fn from_bounds(lower: Vec<Vec<f64>>, upper: Vec<Vec<f64>>, iteration: usize) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(contract("lower and upper tables must have the same non-zero number of outputs"));
        }
        let n = lower[0].len();
        for (l, u) in lower.iter().zip(&upper) {
            if l.len() != n || u.len() != n {
                return Err(contract("every output needs one bound per domain point"));
            }
            if l.iter().zip(u).any(|(l, u)| !(l <= u)) {
                return Err(contract("lower bound exceeds upper bound"));
            }
        }
        Ok(Self { lower, upper, iteration })
    }

    /// `true` when every interval of `self` lies inside the matching interval
    /// of `previous`.
    pub fn is_contained_in(&self, previous: &ConfidenceState) -> bool {
        self.lower.iter().zip(&previous.lower).all(|(a, b)| a.iter().zip(b).all(|(x, y)| x >= y))
            && self.upper.iter().zip(&previous.upper).all(|(a, b)| a.iter().zip(b).all(|(x, y)| x <= y))
    }

    /// Applies the GP intervals `mu +- sqrt_beta * sigma` for iteration
    /// `iteration`. `posteriors` is indexed `[output][point]`.
    ///
    /// With [`IntervalUpdate::Intersect`], a disjoint pair of intervals is
    /// recorded as a misspecification event and the interval collapses to the
    /// endpoint of the previous interval nearest the GP interval, so nesting
    /// still holds.
    pub fn update(
        &mut self,
        posteriors: &[Vec<Posterior>],
        sqrt_beta: f64,
        rule: IntervalUpdate,
        iteration: usize,
    ) -> Result<Vec<MisspecificationEvent>> {
        if posteriors.len() != self.num_outputs() || posteriors.iter().any(|p| p.len() != self.num_points()) {
            return Err(contract("posterior table does not match the confidence state shape"));
        }
        if !(sqrt_beta >= 0.0 && sqrt_beta.is_finite()) {
            return Err(contract(format!("sqrt_beta must be finite and non-negative, got {sqrt_beta}")));
        }
        let mut events = Vec::new();
        for (i, row) in posteriors.iter().enumerate() {
            for (a, p) in row.iter().enumerate() {
                let half = sqrt_beta * p.std();
                let (ql, qu) = (p.mean - half, p.mean + half);
                match rule {
                    IntervalUpdate::Replace => {
                        self.lower[i][a] = ql;
                        self.upper[i][a] = qu;
                    }
                    IntervalUpdate::Intersect => {
                        let (ol, ou) = (self.lower[i][a], self.upper[i][a]);
                        let l = ol.max(ql);
                        let u = ou.min(qu);
                        if l <= u {
                            self.lower[i][a] = l;
                            self.upper[i][a] = u;
                        } else {
                            events.push(MisspecificationEvent {
                                iteration,
                                point: a,
                                output: i,
                                previous: (ol, ou),
                                gp_interval: (ql, qu),
                            });
                            let pinned = if ql > ou { ou } else { ol };
                            self.lower[i][a] = pinned;
                            self.upper[i][a] = pinned;
                        }
                    }
                }
            }
        }
        self.iteration = iteration;
        Ok(events)
    }
}
