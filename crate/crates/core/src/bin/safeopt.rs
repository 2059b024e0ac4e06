use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use safeopt::experiment::{self, ExperimentConfig, Overrides, RunStatus};

#[derive(Parser)]
#[command(name = "safeopt", version, about = "Safe Bayesian optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run only this seed instead of the configured list.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print the effective config and exit.
    #[arg(long, global = true)]
    dry_run: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed of an experiment config.
    Run { config: PathBuf },
    /// Aggregate the traces in a run directory.
    Summarize { dir: PathBuf },
    /// Export truth tables and the reachable optimum of a synthetic config.
    Oracle { config: PathBuf },
}

fn load(cli: &Cli, path: &PathBuf) -> safeopt::Result<ExperimentConfig> {
    let overrides = Overrides {
        seed: cli.seed,
        output_dir: cli.out.clone(),
    };
    Ok(overrides.apply(ExperimentConfig::load(path)?))
}

fn run(cli: &Cli) -> safeopt::Result<bool> {
    match &cli.command {
        Command::Run { config } => {
            let cfg = load(cli, config)?;
            if cli.dry_run {
                cfg.resolve()?;
                print!("{}", cfg.to_toml()?);
                return Ok(true);
            }
            let runs = experiment::run_experiment(&cfg)?;
            let mut ok = true;
            for r in &runs {
                let best = r.final_best.as_ref().map(|b| format!("{b:?}")).unwrap_or_else(|| "-".into());
                println!(
                    "seed {:>4}  {:<9}  evaluations {:>3}  violations {}  best {}",
                    r.seed,
                    format!("{:?}", r.status).to_lowercase(),
                    r.evaluations,
                    r.violations,
                    best
                );
                if let Some(e) = &r.error {
                    eprintln!("seed {}: {e}", r.seed);
                }
                ok &= r.status != RunStatus::Failed;
            }
            println!("wrote {}", cfg.output_dir.display());
            Ok(ok)
        }
        Command::Summarize { dir } => {
            let dir = cli.out.as_ref().unwrap_or(dir);
            let report = experiment::summarize(dir)?;
            println!("runs {} (completed {}, failed {}, skipped {})", report.runs, report.completed, report.failed, report.skipped);
            println!("violation rate {:.4} ({} runs)", report.violation_rate, report.violating_runs);
            match report.median_iterations_to_epsilon {
                Some(m) => println!("median iterations to epsilon {m} ({} converged)", report.converged_runs),
                None => println!("median iterations to epsilon -"),
            }
            if let Some(i) = report.median_improvement {
                println!("median improvement {:.2}%", 100.0 * i);
            }
            if let Some(g) = report.mean_oracle_gap {
                println!("mean oracle gap {g:.4}");
            }
            println!("wrote {} and {}", dir.join("summary.json").display(), dir.join("growth.csv").display());
            Ok(true)
        }
        Command::Oracle { config } => {
            let cfg = load(cli, config)?;
            if cli.dry_run {
                cfg.resolve()?;
                print!("{}", cfg.to_toml()?);
                return Ok(true);
            }
            for r in experiment::oracle_export(&cfg)? {
                match r.optimum {
                    Some(f) => println!(
                        "seed {:>4}  reachable {:>4}  f* {f:.6}  at {:?}",
                        r.seed,
                        r.reachable.len(),
                        r.optimum_point.unwrap_or_default()
                    ),
                    None => println!("seed {:>4}  no safe point", r.seed),
                }
            }
            println!("wrote {}", cfg.output_dir.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
