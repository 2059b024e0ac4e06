//! Draws a synthetic instance and computes the set reachable from its safe
//! seed together with the best value inside it.

use safeopt::bench::{sample_synthetic, SyntheticSpec};
use safeopt::domain::{GridAxis, Metric, ParameterDomain};
use safeopt::gp::KernelSpec;
use safeopt::oracle::{baseline_optimum, reach_closure, reach_operator};

fn main() -> safeopt::Result<()> {
    let domain = ParameterDomain::grid(&[GridAxis::new(0.0, 1.0, 50)], Metric::Euclidean)?;
    let spec = SyntheticSpec {
        kernels: vec![KernelSpec::matern32(1.0, vec![0.2])?; 2],
        noise_std: vec![0.05; 2],
        unsafe_probability: Some(0.4),
    };
    let inst = sample_synthetic(7, &spec, &domain)?;
    let lip = inst.lipschitz_constants();
    println!("unsafe fraction {:.2}, L = {:.3}", inst.unsafe_fraction(), inst.lipschitz[0]);

    let eps = 0.1;
    let mut set = inst.safe_seed.clone();
    for round in 1.. {
        let next = reach_operator(&set, &inst.truth, &domain, &lip, eps)?;
        println!("round {round}: {} points", next.len());
        if next == set {
            break;
        }
        set = next;
    }
    let closure = reach_closure(&inst.safe_seed, &inst.truth, &domain, &lip, eps)?;
    assert_eq!(closure, set);
    let fstar = baseline_optimum(&inst.safe_seed, &inst.truth, &domain, &lip, eps)?;
    let global = inst.truth.table(0).iter().copied().fold(f64::NEG_INFINITY, f64::max);
    println!("f*_eps = {fstar:.4} (unconstrained maximum {global:.4})");
    Ok(())
}
