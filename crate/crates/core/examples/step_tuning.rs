//! Tunes the step-response controller on the simulated plant and compares the
//! result with the initial gains.

use safeopt::bench::{simulate_step, INITIAL_GAINS};
use safeopt::experiment::{ExperimentConfig, PlantObjective, ResolvedBenchmark};

fn main() -> safeopt::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/step_response.toml");
    let resolved = ExperimentConfig::load(path)?.resolve()?;
    let ResolvedBenchmark::Plant { plant, .. } = &resolved.bench else {
        unreachable!("step config")
    };

    let mut opt = resolved.safeopt(None)?;
    let mut objective = PlantObjective::new(plant.clone(), None, 42);
    let outcome = opt.run(&mut objective, resolved.config.iterations)?;

    for e in opt.trace().entries() {
        println!(
            "n {:>2}  tau {:.3}  zeta {:.3}  f {:+.4}  rate margin {:+.3}  |S| {}",
            e.n, e.params[0], e.params[1], e.observations[0], e.observations[1], e.safe_size
        );
    }
    let best = opt.domain().point(outcome.best).to_vec();
    // the roll rate is driven by measurement noise, so it needs the noisy plant
    let quiet = plant.noiseless();
    let before = simulate_step(&quiet, &INITIAL_GAINS, 0)?.cost;
    let after = simulate_step(&quiet, &best, 0)?.cost;
    let rate = |a: &[f64]| simulate_step(plant, a, 7).map(|r| r.max_rate);
    println!("initial {:?}: RMSE {before:.4} m, peak rate {:.3} rad/s", INITIAL_GAINS, rate(&INITIAL_GAINS)?);
    println!("tuned   {best:?}: RMSE {after:.4} m, peak rate {:.3} rad/s", rate(&best)?);
    println!("improvement {:.1}%", 100.0 * (1.0 - after / before));
    Ok(())
}
