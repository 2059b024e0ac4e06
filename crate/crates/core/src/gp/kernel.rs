//! Stationary covariance functions over parameter vectors.

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    /// Matérn kernel with smoothness 3/2; sample paths are once differentiable.
    Matern32,
    SquaredExponential,
}

/// A stationary kernel `k(a, a') = variance * shape(r)` with the scaled distance
/// `r = sqrt(sum_d ((a_d - a'_d) / l_d)^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    /// Prior variance, `k(a, a)`.
    pub variance: f64,
    /// One positive lengthscale per input dimension.
    pub lengthscales: Vec<f64>,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, variance: f64, lengthscales: Vec<f64>) -> Result<Self> {
        let spec = Self {
            family,
            variance,
            lengthscales,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn matern32(prior_std: f64, lengthscales: Vec<f64>) -> Result<Self> {
        Self::new(KernelFamily::Matern32, prior_std * prior_std, lengthscales)
    }

    pub fn squared_exponential(prior_std: f64, lengthscales: Vec<f64>) -> Result<Self> {
        Self::new(
            KernelFamily::SquaredExponential,
            prior_std * prior_std,
            lengthscales,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.variance > 0.0 && self.variance.is_finite()) {
            return Err(contract(format!(
                "kernel variance must be positive and finite, got {}",
                self.variance
            )));
        }
        if self.lengthscales.is_empty() {
            return Err(contract("kernel needs at least one lengthscale"));
        }
        if let Some(l) = self
            .lengthscales
            .iter()
            .find(|l| !(**l > 0.0 && l.is_finite()))
        {
            return Err(contract(format!("lengthscales must be positive, got {l}")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    pub fn prior_std(&self) -> f64 {
        self.variance.sqrt()
    }

    /// Checked evaluation.
    pub fn eval(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        if a.len() != self.dim() || b.len() != self.dim() {
            return Err(contract(format!(
                "kernel expects {}-dimensional inputs, got {} and {}",
                self.dim(),
                a.len(),
                b.len()
            )));
        }
        Ok(self.eval_unchecked(a, b))
    }

    /// Evaluation without the dimension check; callers guarantee `a` and `b`
    /// have `self.dim()` entries.
    #[inline]
    pub(crate) fn eval_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        let r2: f64 = a
            .iter()
            .zip(b)
            .zip(&self.lengthscales)
            .map(|((x, y), l)| {
                let d = (x - y) / l;
                d * d
            })
            .sum();
        self.variance * self.shape(r2)
    }

    #[inline]
    fn shape(&self, r2: f64) -> f64 {
        match self.family {
            KernelFamily::Matern32 => {
                let s = (3.0 * r2).sqrt();
                (1.0 + s) * (-s).exp()
            }
            KernelFamily::SquaredExponential => (-0.5 * r2).exp(),
        }
    }
}

/// Evaluate `spec` at `(a, b)`, failing on a dimension mismatch.
pub fn kernel_eval(spec: &KernelSpec, a: &[f64], b: &[f64]) -> Result<f64> {
    spec.eval(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_is_prior_variance() {
        let k = KernelSpec::matern32(1.0, vec![1.0]).unwrap();
        assert_eq!(k.eval(&[0.3], &[0.3]).unwrap(), 1.0);
        let k = KernelSpec::squared_exponential(0.5, vec![0.2, 3.0]).unwrap();
        assert_eq!(k.eval(&[0.3, 1.0], &[0.3, 1.0]).unwrap(), 0.25);
    }

    #[test]
    fn matern_unit_distance() {
        // (1 + sqrt 3) exp(-sqrt 3), evaluated independently
        let expected = 0.483_357_724_596_507_7;
        let k = KernelSpec::matern32(1.0, vec![1.0]).unwrap();
        assert!((k.eval(&[0.0], &[1.0]).unwrap() - expected).abs() < 1e-14);
        // lengthscale rescales the distance
        let k = KernelSpec::matern32(1.0, vec![0.25]).unwrap();
        assert!((k.eval(&[1.0], &[1.25]).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn step_response_hyperparameter_regime() {
        // prior std 0.2 C(a0), lengthscales 0.05 in both gains
        let c0 = 0.45;
        let k = KernelSpec::matern32(0.2 * c0, vec![0.05, 0.05]).unwrap();
        let v = k.eval(&[0.9, 0.8], &[0.9, 0.8]).unwrap();
        assert!((v - 0.04 * c0 * c0).abs() < 1e-15);
        let near = k.eval(&[0.9, 0.8], &[0.95, 0.8]).unwrap();
        assert!((near / v - 0.483_357_724_596_507_7).abs() < 1e-12);
    }

    #[test]
    fn symmetric() {
        let k = KernelSpec::matern32(1.3, vec![0.4, 0.7]).unwrap();
        let a = [0.1, -0.4];
        let b = [0.9, 0.35];
        assert_eq!(k.eval(&a, &b).unwrap(), k.eval(&b, &a).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let k = KernelSpec::matern32(1.0, vec![1.0, 1.0]).unwrap();
        assert!(k.eval(&[0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn invalid_hyperparameters() {
        assert!(KernelSpec::matern32(0.0, vec![1.0]).is_err());
        assert!(KernelSpec::matern32(1.0, vec![0.0]).is_err());
        assert!(KernelSpec::matern32(1.0, vec![]).is_err());
    }
}
