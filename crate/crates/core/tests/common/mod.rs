#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use safeopt::domain::{Metric, ParameterDomain};
use safeopt::gp::{KernelSpec, Observation, SurrogateKernelSpec};
use safeopt::optimizer::{expanders, maximizers, safe_set, ConfidenceState, Lipschitz, SafeSetMode};

pub struct RandomSets {
    pub domain: ParameterDomain,
    pub points: Vec<Vec<f64>>,
    pub state: ConfidenceState,
    pub seed: Vec<usize>,
    pub previous: Vec<usize>,
    pub lipschitz: Lipschitz,
}

fn bound(rng: &mut ChaCha8Rng) -> (f64, f64) {
    match rng.random_range(0..10) {
        0 => (f64::NEG_INFINITY, f64::INFINITY),
        1 => (0.0, f64::INFINITY),
        _ => {
            let lo = rng.random_range(-1.5..1.5);
            (lo, lo + rng.random_range(0.0..1.5))
        }
    }
}

fn subset(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Vec<usize> {
    let mut s: Vec<usize> = (0..n).filter(|_| rng.random_bool(p)).collect();
    if s.is_empty() {
        s.push(rng.random_range(0..n));
    }
    s
}

/// A random confidence state over a random 1-D or 2-D point cloud.
pub fn random_sets(seed: u64, max_points: usize) -> RandomSets {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=max_points);
    let dim = rng.random_range(1..=2);
    let q = rng.random_range(1..=2);
    let points: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
    let domain = ParameterDomain::from_points(points.clone(), Metric::Euclidean).unwrap();
    let mut lower = vec![vec![0.0; n]; q + 1];
    let mut upper = vec![vec![0.0; n]; q + 1];
    for i in 0..=q {
        for a in 0..n {
            let (l, u) = bound(&mut rng);
            lower[i][a] = l;
            upper[i][a] = u;
        }
    }
    let state = ConfidenceState::from_bounds(lower, upper, 0).unwrap();
    let seed_set = subset(&mut rng, n, 0.05);
    let mut previous: BTreeSet<usize> = subset(&mut rng, n, 0.2).into_iter().collect();
    previous.extend(&seed_set);
    let lipschitz = if rng.random_bool(0.5) {
        Lipschitz::Uniform(rng.random_range(0.5..10.0))
    } else {
        Lipschitz::PerConstraint((0..q).map(|_| rng.random_range(0.5..10.0)).collect())
    };
    RandomSets {
        domain,
        points,
        state,
        seed: seed_set,
        previous: previous.into_iter().collect(),
        lipschitz,
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn lip(l: &Lipschitz, i: usize) -> f64 {
    match l {
        Lipschitz::Uniform(v) => *v,
        Lipschitz::PerConstraint(v) => v[i - 1],
    }
}

pub fn brute_safe_lipschitz(r: &RandomSets) -> Vec<usize> {
    let q = r.state.num_outputs() - 1;
    let mut out: BTreeSet<usize> = r.previous.iter().copied().collect();
    out.extend(&r.seed);
    for (b, pb) in r.points.iter().enumerate() {
        let mut all = true;
        for i in 1..=q {
            let mut any = false;
            for &a in &r.previous {
                if r.state.lower(i, a) - lip(&r.lipschitz, i) * dist(&r.points[a], pb) >= 0.0 {
                    any = true;
                }
            }
            all &= any;
        }
        if all {
            out.insert(b);
        }
    }
    out.into_iter().collect()
}

pub fn brute_safe_direct(r: &RandomSets) -> Vec<usize> {
    let q = r.state.num_outputs() - 1;
    let mut out: BTreeSet<usize> = r.seed.iter().copied().collect();
    for a in 0..r.points.len() {
        if (1..=q).all(|i| r.state.lower(i, a) >= 0.0) {
            out.insert(a);
        }
    }
    out.into_iter().collect()
}

pub fn brute_maximizers(r: &RandomSets, safe: &[usize]) -> Vec<usize> {
    let mut best = f64::NEG_INFINITY;
    for &a in safe {
        if r.state.lower(0, a) > best {
            best = r.state.lower(0, a);
        }
    }
    safe.iter().copied().filter(|&a| r.state.upper(0, a) >= best).collect()
}

pub fn brute_expanders(r: &RandomSets, safe: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let q = r.state.num_outputs() - 1;
    let inside: BTreeSet<usize> = safe.iter().copied().collect();
    let mut scores = vec![0; r.points.len()];
    for &a in safe {
        let mut count = 0;
        for b in 0..r.points.len() {
            if inside.contains(&b) {
                continue;
            }
            let d = dist(&r.points[a], &r.points[b]);
            if (1..=q).any(|i| r.state.upper(i, a) - lip(&r.lipschitz, i) * d >= 0.0) {
                count += 1;
            }
        }
        scores[a] = count;
    }
    let set = safe.iter().copied().filter(|&a| scores[a] > 0).collect();
    (set, scores)
}

/// Compares the library set builders against the brute-force versions in both
/// safe-set modes. Returns a description of the first mismatch.
pub fn compare_sets(r: &RandomSets) -> Result<(), String> {
    for mode in [SafeSetMode::Lipschitz, SafeSetMode::GpDirect] {
        let safe = safe_set(&r.state, &r.domain, mode, &r.previous, &r.seed, Some(&r.lipschitz))
            .map_err(|e| e.to_string())?;
        let expected = match mode {
            SafeSetMode::Lipschitz => brute_safe_lipschitz(r),
            SafeSetMode::GpDirect => brute_safe_direct(r),
        };
        if safe != expected {
            return Err(format!("{mode:?} safe set {safe:?} != {expected:?}"));
        }
        let m = maximizers(&r.state, &safe).map_err(|e| e.to_string())?;
        if m != brute_maximizers(r, &safe) {
            return Err(format!("{mode:?} maximizers differ"));
        }
        let g = expanders(&r.state, &r.domain, &safe, &r.lipschitz).map_err(|e| e.to_string())?;
        if g != brute_expanders(r, &safe) {
            return Err(format!("{mode:?} expanders differ"));
        }
    }
    Ok(())
}

/// Random kernel over `outputs` outputs in `dim` dimensions, with a cross term
/// between outputs 0 and 1 half of the time.
pub fn random_kernel(rng: &mut ChaCha8Rng, outputs: usize, dim: usize) -> SurrogateKernelSpec {
    let ls: Vec<f64> = (0..dim).map(|_| rng.random_range(0.2..1.0)).collect();
    let kernels: Vec<KernelSpec> = (0..outputs)
        .map(|_| {
            let std = rng.random_range(0.5..2.0);
            if rng.random_bool(0.5) {
                KernelSpec::matern32(std, ls.clone()).unwrap()
            } else {
                KernelSpec::squared_exponential(std, ls.clone()).unwrap()
            }
        })
        .collect();
    let noise: Vec<f64> = (0..outputs).map(|_| rng.random_range(0.1..0.5)).collect();
    let mut spec = SurrogateKernelSpec::independent(kernels.clone(), noise).unwrap();
    if outputs >= 2 && rng.random_bool(0.5) && kernels[0].family == kernels[1].family {
        let cap = (kernels[0].variance * kernels[1].variance).sqrt();
        let cross = KernelSpec::new(kernels[0].family, rng.random_range(0.1..0.9) * cap, ls).unwrap();
        spec = spec.with_cross(0, 1, cross).unwrap();
    }
    spec
}

pub fn random_data(rng: &mut ChaCha8Rng, spec: &SurrogateKernelSpec, n: usize) -> Vec<Observation> {
    let dim = spec.input_dim();
    (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..1.0)).collect();
            Observation::new(x, rng.random_range(0..spec.num_outputs()), rng.random_range(-2.0..2.0))
        })
        .collect()
}

pub fn random_queries(rng: &mut ChaCha8Rng, spec: &SurrogateKernelSpec, n: usize) -> Vec<(Vec<f64>, usize)> {
    (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..spec.input_dim()).map(|_| rng.random_range(0.0..1.0)).collect();
            (x, rng.random_range(0..spec.num_outputs()))
        })
        .collect()
}
