//! Builds an experiment from an inline TOML document, runs it into a temporary
//! directory and aggregates the results.

use safeopt::experiment::{run_experiment, summarize, ExperimentConfig};

const CONFIG: &str = r#"
schema_version = 1
name = "inline"
iterations = 20
output_dir = "unused"
seeds = [1, 2, 3, 4]

[benchmark]
kind = "synthetic"
unsafe_probability = 0.3

[domain]
axes = [{ lower = 0.0, upper = 1.0, count = 15 }, { lower = 0.0, upper = 1.0, count = 15 }]

[[outputs]]
prior_std = 1.0
lengthscales = [0.3, 0.3]
noise_std = 0.05

[[outputs]]
prior_std = 1.0
lengthscales = [0.3, 0.3]
noise_std = 0.05

[algorithm]
mode = "lipschitz"
lipschitz = "empirical"
epsilon = 0.1
beta = { mode = "constant", sqrt_beta = 3.0 }
"#;

fn main() -> safeopt::Result<()> {
    let dir = std::env::temp_dir().join("safeopt-inline-example");
    let mut config = ExperimentConfig::from_toml(CONFIG)?;
    config.output_dir = dir.clone();
    for run in run_experiment(&config)? {
        println!(
            "seed {}: {:?}, {} evaluations, best {:?}",
            run.seed, run.status, run.evaluations, run.final_best
        );
    }
    let report = summarize(&dir)?;
    println!("violation rate {}, mean oracle gap {:?}", report.violation_rate, report.mean_oracle_gap);
    for row in report.growth.iter().step_by(5) {
        println!("n {:>2}: mean |S| {:.1} (min {}, max {})", row.n, row.mean, row.min, row.max);
    }
    println!("artifacts in {}", dir.display());
    Ok(())
}
