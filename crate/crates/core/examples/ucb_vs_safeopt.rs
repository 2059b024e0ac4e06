//! GP-UCB ignores the constraints and eventually evaluates unsafe parameters;
//! SafeOpt-MC on the same draws does not.

use safeopt::experiment::{ExperimentConfig, RunStatus};

fn main() -> safeopt::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs");
    let safe = ExperimentConfig::load(format!("{dir}/synthetic.toml"))?.resolve()?;
    let ucb = ExperimentConfig::load(format!("{dir}/synthetic_ucb.toml"))?.resolve()?;
    let (mut runs, mut safe_bad, mut ucb_bad) = (0, 0, 0);
    for seed in 1..=20 {
        let a = safe.run_seed(seed)?.summary;
        if a.status == RunStatus::Skipped {
            continue;
        }
        let b = ucb.run_seed(seed)?.summary;
        runs += 1;
        safe_bad += usize::from(a.violations > 0);
        ucb_bad += usize::from(b.violations > 0);
        println!(
            "seed {seed:>2}: SafeOpt-MC {:>2} unsafe evaluations, gap {:+.3} | GP-UCB {:>2} unsafe evaluations",
            a.violations,
            a.oracle_gap.unwrap_or(f64::NAN),
            b.violations
        );
    }
    println!("runs with an unsafe evaluation: SafeOpt-MC {safe_bad}/{runs}, GP-UCB {ucb_bad}/{runs}");
    Ok(())
}
