//! Contexts: external variables (such as a reference speed) that enter the
//! kernel as a product factor and select which slice of the model the
//! optimizer works on.

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::gp::{KernelSpec, SurrogateKernelSpec};
use crate::optimizer::SafeOpt;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextSpec {
    /// Name of each context coordinate, e.g. `"speed"`.
    pub labels: Vec<String>,
    pub units: Vec<String>,
    /// Inclusive `[lower, upper]` per coordinate.
    pub bounds: Vec<[f64; 2]>,
    pub kernel: KernelSpec,
}

impl ContextSpec {
    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        let d = self.dim();
        if self.labels.len() != d || self.units.len() != d || self.bounds.len() != d {
            return Err(contract(format!("context needs {d} labels, units and bounds")));
        }
        if self.bounds.iter().any(|[lo, hi]| !(lo <= hi && lo.is_finite() && hi.is_finite())) {
            return Err(contract("context bounds must be finite with lower <= upper"));
        }
        Ok(())
    }

    pub fn check(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.dim() {
            return Err(contract(format!("expected {} context coordinates, got {}", self.dim(), z.len())));
        }
        for ((v, [lo, hi]), name) in z.iter().zip(&self.bounds).zip(&self.labels) {
            if !(v >= lo && v <= hi) {
                return Err(contract(format!("context {name} = {v} outside [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    /// `kernel` with this context as a product factor.
    pub fn attach(&self, kernel: SurrogateKernelSpec) -> Result<SurrogateKernelSpec> {
        self.validate()?;
        kernel.with_context(self.kernel.clone())
    }
}

/// `k_p((a, i), (a', j)) * k_z(z, z')`.
#[allow(clippy::too_many_arguments)]
pub fn contextual_kernel_eval(
    kernel: &SurrogateKernelSpec,
    context: &ContextSpec,
    a: &[f64],
    i: usize,
    z: &[f64],
    b: &[f64],
    j: usize,
    z2: &[f64],
) -> Result<f64> {
    if kernel.context.is_some() {
        return Err(contract("parameter kernel already has a context factor"));
    }
    Ok(kernel.eval(a, i, b, j)? * context.kernel.eval(z, z2)?)
}

/// Moves `optimizer` to context `z` after checking the declared bounds.
pub fn fix_context(optimizer: &mut SafeOpt, context: &ContextSpec, z: &[f64]) -> Result<()> {
    context.check(z)?;
    optimizer.fix_context(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn speed() -> ContextSpec {
        ContextSpec {
            labels: vec!["speed".into()],
            units: vec!["m/s".into()],
            bounds: vec![[0.0, 3.0]],
            kernel: KernelSpec::matern32(1.0, vec![0.25]).unwrap(),
        }
    }

    fn param() -> SurrogateKernelSpec {
        SurrogateKernelSpec::independent(vec![KernelSpec::matern32(0.7, vec![0.3, 0.3]).unwrap()], vec![0.1])
            .unwrap()
    }

    #[test]
    fn same_context_reduces_to_parameter_kernel() {
        let k = param();
        let kp = k.eval(&[0.1, 0.2], 0, &[0.3, 0.1], 0).unwrap();
        let v = contextual_kernel_eval(&k, &speed(), &[0.1, 0.2], 0, &[1.0], &[0.3, 0.1], 0, &[1.0]).unwrap();
        assert_eq!(v, kp);
    }

    #[test]
    fn context_distance_scales_and_decays() {
        let k = param();
        let kp = k.eval(&[0.1, 0.2], 0, &[0.1, 0.2], 0).unwrap();
        let v = contextual_kernel_eval(&k, &speed(), &[0.1, 0.2], 0, &[1.0], &[0.1, 0.2], 0, &[1.25]).unwrap();
        assert!((v / kp - 0.483_357_724_596_507_7).abs() < 1e-12);
        let far = contextual_kernel_eval(&k, &speed(), &[0.1, 0.2], 0, &[0.0], &[0.1, 0.2], 0, &[100.0]).unwrap();
        assert!(far < 1e-100);
    }

    #[test]
    fn attached_kernel_agrees() {
        let k = speed().attach(param()).unwrap();
        let direct = k.eval(&[0.1, 0.2, 1.0], 0, &[0.3, 0.1, 1.4], 0).unwrap();
        let v = contextual_kernel_eval(&param(), &speed(), &[0.1, 0.2], 0, &[1.0], &[0.3, 0.1], 0, &[1.4]).unwrap();
        assert!((direct - v).abs() < 1e-15);
    }

    #[test]
    fn bounds_are_enforced() {
        assert!(speed().check(&[3.5]).is_err());
        assert!(speed().check(&[1.0, 2.0]).is_err());
        assert!(speed().check(&[1.8]).is_ok());
    }
}
