//! Circle tracking with the reference speed as a context: optimize at 1 m/s,
//! then raise the speed while the model still certifies a safe seed.

use safeopt::contexts;
use safeopt::experiment::{ExperimentConfig, PlantObjective, ResolvedBenchmark};
use safeopt::Error;

fn main() -> safeopt::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/circle_context.toml");
    let resolved = ExperimentConfig::load(path)?.resolve()?;
    let ResolvedBenchmark::Plant { plant, speed, .. } = &resolved.bench else {
        unreachable!("circle config")
    };
    let ctx = resolved.context.as_ref().expect("context section");
    let schedule = &resolved.config.context.as_ref().expect("context section").schedule;

    let mut opt = resolved.safeopt(None)?;
    let mut objective = PlantObjective::new(plant.clone(), *speed, 3);
    let mut violations = 0;
    let mut iterations = resolved.config.iterations;
    for &z in schedule {
        match contexts::fix_context(&mut opt, ctx, &[z]) {
            Ok(()) => {}
            Err(Error::NoSafeSeed { .. }) => {
                println!("{z:.2} m/s: no certified safe parameters, stopping");
                break;
            }
            Err(e) => return Err(e),
        }
        let n = opt.iteration();
        let out = opt.run(&mut objective, iterations)?;
        violations += opt.trace().entries()[n..]
            .iter()
            .filter(|e| e.observations[1..].iter().any(|g| *g < 0.0))
            .count();
        let best = opt.domain().point(out.best).to_vec();
        println!(
            "{z:.2} m/s: safe set {:>3}, best tau {:.3} zeta {:.3}",
            opt.sets()?.safe.len(),
            best[0],
            best[1]
        );
        iterations = resolved.config.context.as_ref().map_or(10, |c| c.iterations_per_context);
    }
    println!("{} evaluations, {violations} constraint violations", opt.iteration());
    Ok(())
}
