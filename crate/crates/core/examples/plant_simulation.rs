//! Simulates the step and circle references for a few controller gains.

use safeopt::bench::{simulate_circle, simulate_step, PlantSpec, INITIAL_GAINS};

fn main() -> safeopt::Result<()> {
    let plant = PlantSpec::default().calibrated_step(INITIAL_GAINS)?;
    println!("step reference cost {:.4} m", plant.reference_cost);
    for gains in [INITIAL_GAINS, [0.6, 0.5], [0.4, 0.6], [0.3, 0.4]] {
        let r = simulate_step(&plant, &gains, 1)?;
        println!(
            "step   tau {:.2} zeta {:.2}: RMSE {:.4}  peak rate {:.3}  f {:+.4}  rate margin {:+.3}",
            gains[0], gains[1], r.cost, r.max_rate, r.performance, r.constraints[0]
        );
    }
    let circle = PlantSpec::default().calibrated_circle(INITIAL_GAINS, 1.0)?;
    for speed in [1.0, 1.4, 1.8] {
        for gains in [INITIAL_GAINS, [0.5, 0.7]] {
            let r = simulate_circle(&circle, &gains, speed, 1)?;
            println!(
                "circle {speed:.1} m/s tau {:.2} zeta {:.2}: RMSE {:.4}  peak rate {:.3}  margins {:+.3} {:+.3}",
                gains[0], gains[1], r.cost, r.max_rate, r.constraints[0], r.constraints[1]
            );
        }
    }
    Ok(())
}
