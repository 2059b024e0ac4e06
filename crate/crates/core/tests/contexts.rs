use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use safeopt::contexts::{fix_context, ContextSpec};
use safeopt::domain::{GridAxis, Metric, ParameterDomain};
use safeopt::gp::{GpModel, KernelSpec, Observation, SurrogateKernelSpec};
use safeopt::optimizer::{objective_fn, AlgoConfig, BetaSchedule, BoxError, Lipschitz, SafeOpt, SafeSetMode};
use safeopt::Error;

fn domain() -> ParameterDomain {
    ParameterDomain::grid(&[GridAxis::new(0.0, 1.0, 41)], Metric::Euclidean).unwrap()
}

fn kernel() -> SurrogateKernelSpec {
    SurrogateKernelSpec::independent(
        vec![KernelSpec::matern32(1.0, vec![0.2]).unwrap(), KernelSpec::matern32(1.0, vec![0.3]).unwrap()],
        vec![0.05, 0.05],
    )
    .unwrap()
}

fn speed() -> ContextSpec {
    ContextSpec {
        labels: vec!["speed".into()],
        units: vec!["m/s".into()],
        bounds: vec![[0.0, 3.0]],
        kernel: KernelSpec::matern32(1.0, vec![0.25]).unwrap(),
    }
}

fn config(mode: SafeSetMode) -> AlgoConfig {
    AlgoConfig {
        mode,
        lipschitz: Some(Lipschitz::Uniform(3.0)),
        epsilon: 0.0,
        beta: BetaSchedule::Constant { sqrt_beta: 2.0 },
        per_output_scaling: false,
    }
}

/// `f` peaks at 0.7, `g` is positive on the lower half of the domain and
/// shrinks with the context.
fn truth(a: f64, z: f64) -> [f64; 2] {
    [(-(a - 0.7) * (a - 0.7) / 0.02).exp(), 0.6 - a - 0.2 * (z - 1.0)]
}

fn noisy(seed: u64) -> impl FnMut(&[f64], Option<&[f64]>) -> Result<Vec<f64>, BoxError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    move |p, z| {
        let t = truth(p[0], z.map_or(1.0, |z| z[0]));
        Ok(t.iter().map(|v| v + 0.05 * rng.sample::<f64, _>(StandardNormal)).collect())
    }
}

#[test]
fn single_context_matches_plain_run() {
    for mode in [SafeSetMode::Lipschitz, SafeSetMode::GpDirect] {
        let mut plain = SafeOpt::new(domain(), kernel(), vec![0], config(mode)).unwrap();
        plain.run(&mut objective_fn(noisy(4)), 15).unwrap();
        let ctx_kernel = speed().attach(kernel()).unwrap();
        let mut ctx = SafeOpt::contextual(domain(), ctx_kernel, vec![0], config(mode), vec![1.0]).unwrap();
        ctx.run(&mut objective_fn(noisy(4)), 15).unwrap();
        let (a, b) = (plain.trace().entries(), ctx.trace().entries());
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert_eq!(y.context, vec![1.0]);
            assert_eq!((x.point, x.output, x.best), (y.point, y.output, y.best));
            assert_eq!((x.safe_size, x.maximizers, x.expanders), (y.safe_size, y.maximizers, y.expanders));
            assert_eq!(x.width.to_bits(), y.width.to_bits());
            assert_eq!(x.best_lower.to_bits(), y.best_lower.to_bits());
            assert_eq!(x.observations, y.observations);
        }
    }
}

#[test]
fn observations_inform_other_contexts() {
    let spec = speed().attach(kernel()).unwrap();
    let mut model = GpModel::new(spec.clone()).unwrap();
    model.condition(Observation::new(vec![0.3, 1.0], 0, 0.5)).unwrap();
    model.condition(Observation::new(vec![0.3, 1.0], 1, 0.2)).unwrap();
    for z in [1.0, 1.1, 1.25, 1.8, 2.9] {
        for i in 0..2 {
            let prior = spec.eval(&[0.3, z], i, &[0.3, z], i).unwrap();
            let post = model.predict(&[0.3, z], i).unwrap();
            assert!(post.variance < prior, "z = {z}, output {i}");
        }
    }
}

#[test]
fn fixing_contexts() {
    let spec = speed().attach(kernel()).unwrap();
    let mut opt = SafeOpt::contextual(domain(), spec, vec![0], config(SafeSetMode::GpDirect), vec![1.0]).unwrap();
    opt.run(&mut objective_fn(noisy(9)), 20).unwrap();
    let before = opt.sets().unwrap().clone();

    fix_context(&mut opt, &speed(), &[1.0]).unwrap();
    assert_eq!(opt.sets().unwrap(), &before);

    assert!(matches!(fix_context(&mut opt, &speed(), &[3.5]), Err(Error::Contract(_))));
    match fix_context(&mut opt, &speed(), &[2.9]) {
        Err(Error::NoSafeSeed { context }) => assert_eq!(context, vec![2.9]),
        other => panic!("expected no safe seed, got {other:?}"),
    }
    assert_eq!(opt.context(), Some(&[1.0][..]));

    fix_context(&mut opt, &speed(), &[1.05]).unwrap();
    assert_eq!(opt.context(), Some(&[1.05][..]));
    let seed = opt.seed().to_vec();
    assert!(!seed.is_empty());
    // the new seed is certified by the GP alone, so every member is truly safe here
    for &a in &seed {
        assert!(truth(opt.domain().point(a)[0], 1.05)[1] >= 0.0);
    }
    let n = opt.iteration();
    opt.run(&mut objective_fn(noisy(10)), 5).unwrap();
    assert!(opt.trace().entries()[n..].iter().all(|e| e.context == vec![1.05]));
}
