//! SafeOpt-MC on a one-dimensional function with one safety constraint,
//! driven through ask/tell.

use safeopt::domain::{GridAxis, Metric, ParameterDomain};
use safeopt::gp::{KernelSpec, SurrogateKernelSpec};
use safeopt::optimizer::{AlgoConfig, BetaSchedule, Lipschitz, PiRule, SafeOpt, SafeSetMode};

fn f(a: f64) -> f64 {
    (6.0 * a).sin() + 0.5 * a
}

fn g(a: f64) -> f64 {
    0.8 - (a - 0.35).abs() * 1.8
}

fn main() -> safeopt::Result<()> {
    let domain = ParameterDomain::grid(&[GridAxis::new(0.0, 1.0, 101)], Metric::Euclidean)?;
    let kernel = SurrogateKernelSpec::independent(
        vec![KernelSpec::matern32(1.0, vec![0.2])?, KernelSpec::matern32(1.0, vec![0.3])?],
        vec![0.02, 0.02],
    )?;
    let config = AlgoConfig {
        mode: SafeSetMode::Lipschitz,
        lipschitz: Some(Lipschitz::Uniform(2.0)),
        epsilon: 0.05,
        beta: BetaSchedule::Lemma1 { delta: 0.05, pi: PiRule::Basel },
        per_output_scaling: false,
    };
    let start = domain.index_of(&[0.35], 1e-9).expect("grid point");
    let mut opt = SafeOpt::new(domain, kernel, vec![start], config)?;

    for _ in 0..40 {
        let sel = match opt.ask() {
            Ok(sel) if sel.score >= opt.config().epsilon => sel,
            _ => break,
        };
        let a = opt.domain().point(sel.point)[0];
        opt.tell(Ok(vec![f(a), g(a)]))?;
        let e = opt.trace().last().expect("entry");
        println!(
            "n {:>2}  a {:.2}  output {}  width {:.3}  |S| {:>3}  |M| {:>3}  |G| {:>3}  g(a) {:+.3}",
            e.n, a, e.output, e.width, e.safe_size, e.maximizers, e.expanders, g(a)
        );
    }
    let (best, lower) = opt.best_estimate()?;
    let a = opt.domain().point(best)[0];
    println!("best a = {a:.2}, f(a) = {:.3}, lower bound {lower:.3}", f(a));
    Ok(())
}
