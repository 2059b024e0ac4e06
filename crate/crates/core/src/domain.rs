//! Finite parameter domains and the metric used for Lipschitz reasoning.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Euclidean,
    /// Euclidean norm of `(a - a') / scale`, one scale per dimension.
    Scaled(Vec<f64>),
}

/// One axis of a regular grid: `count` evenly spaced values in `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridAxis {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

impl GridAxis {
    pub fn new(lower: f64, upper: f64, count: usize) -> Self {
        Self { lower, upper, count }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lower];
        }
        let step = (self.upper - self.lower) / (self.count - 1) as f64;
        (0..self.count)
            .map(|k| if k + 1 == self.count { self.upper } else { self.lower + step * k as f64 })
            .collect()
    }
}

/// An ordered, finite set of unique parameter vectors.
///
/// Point order is fixed for the lifetime of the domain and is the primary
/// tie-breaker everywhere in the optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterDomain {
    points: Vec<Vec<f64>>,
    dim: usize,
    metric: Metric,
}

impl ParameterDomain {
    pub fn from_points(points: Vec<Vec<f64>>, metric: Metric) -> Result<Self> {
        let dim = points
            .first()
            .map(Vec::len)
            .ok_or_else(|| contract("parameter domain must contain at least one point"))?;
        if dim == 0 {
            return Err(contract("parameter points must have at least one coordinate"));
        }
        let mut seen = HashSet::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(contract(format!("point {i} has dimension {}, expected {dim}", p.len())));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(contract(format!("point {i} has a non-finite coordinate")));
            }
            let key: Vec<u64> = p.iter().map(|v| (v + 0.0).to_bits()).collect();
            if !seen.insert(key) {
                return Err(contract(format!("duplicate domain point {p:?} at index {i}")));
            }
        }
        if let Metric::Scaled(s) = &metric {
            if s.len() != dim || s.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(contract("metric scales must be positive, one per dimension"));
            }
        }
        Ok(Self { points, dim, metric })
    }

    /// Cartesian grid with the first axis varying slowest.
    pub fn grid(axes: &[GridAxis], metric: Metric) -> Result<Self> {
        if axes.is_empty() {
            return Err(contract("grid needs at least one axis"));
        }
        for (d, ax) in axes.iter().enumerate() {
            if ax.count == 0 || !(ax.lower.is_finite() && ax.upper.is_finite()) || ax.upper < ax.lower {
                return Err(contract(format!("invalid grid axis {d}: {ax:?}")));
            }
            if ax.count > 1 && ax.upper == ax.lower {
                return Err(contract(format!("grid axis {d} repeats a single value")));
            }
        }
        let values: Vec<Vec<f64>> = axes.iter().map(GridAxis::values).collect();
        let mut points: Vec<Vec<f64>> = vec![Vec::new()];
        for vals in &values {
            points = points
                .into_iter()
                .flat_map(|prefix| {
                    vals.iter().map(move |v| {
                        let mut p = prefix.clone();
                        p.push(*v);
                        p
                    })
                })
                .collect();
        }
        Self::from_points(points, metric)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn point(&self, index: usize) -> &[f64] {
        &self.points[index]
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.distance_between(&self.points[i], &self.points[j])
    }

    pub fn distance_between(&self, a: &[f64], b: &[f64]) -> f64 {
        match &self.metric {
            Metric::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
            Metric::Scaled(s) => a
                .iter()
                .zip(b)
                .zip(s)
                .map(|((x, y), s)| {
                    let d = (x - y) / s;
                    d * d
                })
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Index of the domain point closest to `p` (first on ties).
    pub fn nearest(&self, p: &[f64]) -> Result<usize> {
        if p.len() != self.dim {
            return Err(contract(format!("expected {}-dimensional point, got {}", self.dim, p.len())));
        }
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, q) in self.points.iter().enumerate() {
            let d = self.distance_between(p, q);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        Ok(best)
    }

    /// Index of the domain point equal to `p` within `tol` in every coordinate.
    pub fn index_of(&self, p: &[f64], tol: f64) -> Option<usize> {
        self.points
            .iter()
            .position(|q| q.len() == p.len() && q.iter().zip(p).all(|(a, b)| (a - b).abs() <= tol))
    }
}
