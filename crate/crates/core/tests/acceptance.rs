//! End-to-end acceptance checks. Each test prints one PASS/FAIL line to stderr
//! (outside the test harness capture) before asserting.

mod common;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use safeopt::experiment::{
    run_experiment, trace_path, ExperimentConfig, Overrides, PlantObjective, ResolvedBenchmark, RunStatus, RunSummary,
};
use safeopt::gp::posterior;
use safeopt::optimizer::{Objective, RunTrace};
use safeopt::oracle::dense_posterior;
use safeopt::Error;

use common::{compare_sets, random_data, random_kernel, random_queries, random_sets};

fn report(id: u32, name: &str, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {id} [{verdict}] {name}: {detail}");
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn load(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(config(name)).unwrap()
}

#[test]
fn criterion_1_gp_matches_dense_oracle() {
    let start = Instant::now();
    let (mut mean_err, mut var_err) = (0.0f64, 0.0f64);
    for k in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + k);
        let outputs = rng.random_range(1..=3);
        let dim = rng.random_range(1..=3);
        let spec = random_kernel(&mut rng, outputs, dim);
        let n = rng.random_range(0..=50);
        let data = random_data(&mut rng, &spec, n);
        let queries = random_queries(&mut rng, &spec, 25);
        let fast = posterior(&spec, &data, &queries).unwrap();
        let dense = dense_posterior(&spec, &data, &queries).unwrap();
        for (a, b) in fast.iter().zip(&dense) {
            mean_err = mean_err.max((a.mean - b.mean).abs());
            var_err = var_err.max((a.variance - b.variance).abs());
        }
    }
    let elapsed = start.elapsed();
    let pass = mean_err <= 1e-8 && var_err <= 1e-8 && elapsed <= Duration::from_secs(10);
    report(
        1,
        "GP posterior vs dense solve",
        pass,
        format!("max |dmean| {mean_err:.2e}, max |dvar| {var_err:.2e}, {elapsed:.2?}"),
    );
    assert!(pass);
}

struct SyntheticSuite {
    safeopt: Vec<RunSummary>,
    ucb: Vec<RunSummary>,
    monotonicity_failures: Vec<u64>,
    epsilon: f64,
    elapsed: Duration,
}

/// The first 50 synthetic draws with a safe point, run with SafeOpt-MC and
/// GP-UCB.
fn synthetic_suite() -> &'static SyntheticSuite {
    static SUITE: OnceLock<SyntheticSuite> = OnceLock::new();
    SUITE.get_or_init(|| {
        let start = Instant::now();
        let safe = load("synthetic.toml").resolve().unwrap();
        let ucb = load("synthetic_ucb.toml").resolve().unwrap();
        let mut suite = SyntheticSuite {
            safeopt: Vec::new(),
            ucb: Vec::new(),
            monotonicity_failures: Vec::new(),
            epsilon: safe.algo.epsilon,
            elapsed: Duration::ZERO,
        };
        for seed in 1u64.. {
            if suite.safeopt.len() == 50 {
                break;
            }
            let run = safe.run_seed(seed).unwrap();
            if run.summary.status == RunStatus::Skipped {
                continue;
            }
            assert_eq!(run.summary.status, RunStatus::Completed);
            if !monotone_replay(&safe, seed, &run.trace) {
                suite.monotonicity_failures.push(seed);
            }
            suite.safeopt.push(run.summary);
            suite.ucb.push(ucb.run_seed(seed).unwrap().summary);
        }
        suite.elapsed = start.elapsed();
        suite
    })
}

/// Replays a run step by step and checks `C_n ⊆ C_{n-1}` and
/// `S_{n-1} ⊆ S_n` at every iteration. The replay must reproduce `expected`.
fn monotone_replay(
    resolved: &safeopt::experiment::ResolvedExperiment,
    seed: u64,
    expected: &RunTrace,
) -> bool {
    let inst = resolved.instance(seed).unwrap().unwrap();
    let mut opt = resolved.safeopt(Some(&inst)).unwrap();
    let mut objective = inst.objective(seed);
    let mut prev_conf = opt.confidence().clone();
    let mut prev_safe = inst.safe_seed.clone();
    let mut ok = true;
    for _ in 0..resolved.config.iterations {
        let safe = opt.sets().unwrap().safe.clone();
        let conf = opt.confidence().clone();
        ok &= conf.is_contained_in(&prev_conf);
        ok &= prev_safe.iter().all(|a| safe.contains(a));
        prev_conf = conf;
        prev_safe = safe;
        match opt.ask() {
            Ok(sel) if sel.score < resolved.algo.epsilon => break,
            Ok(sel) => {
                let params = opt.domain().point(sel.point).to_vec();
                let outcome = objective.evaluate(&params, None);
                opt.tell(outcome).unwrap();
            }
            Err(Error::NoCandidates { .. }) => break,
            Err(e) => panic!("{e}"),
        }
    }
    ok && opt.trace().to_csv_string().unwrap() == expected.to_csv_string().unwrap()
}

#[test]
fn criterion_2_safety_with_lemma1_beta() {
    let s = synthetic_suite();
    let violating: Vec<u64> = s.safeopt.iter().filter(|r| r.violations > 0).map(|r| r.seed).collect();
    let pass = s.safeopt.len() == 50 && violating.len() <= 2 && s.elapsed <= Duration::from_secs(300);
    report(
        2,
        "safety over 50 synthetic draws",
        pass,
        format!("{} of {} runs with a true violation {violating:?}, suite {:.2?}", violating.len(), s.safeopt.len(), s.elapsed),
    );
    assert!(pass);
}

#[test]
fn criterion_3_convergence_to_reachable_optimum() {
    let s = synthetic_suite();
    let eps = s.epsilon;
    let converged = s.safeopt.iter().filter(|r| r.oracle_gap.unwrap() <= eps).count();
    let worst = s.safeopt.iter().map(|r| r.oracle_gap.unwrap()).fold(f64::NEG_INFINITY, f64::max);
    let pass = converged >= 48;
    report(
        3,
        "f(best) >= f*_eps - eps",
        pass,
        format!("{converged}/50 runs within eps = {eps}, largest gap {worst:.4}"),
    );
    assert!(pass);
}

#[test]
fn criterion_4_set_builders_match_exhaustive() {
    let mut failures = Vec::new();
    let mut largest = 0;
    for k in 0..200u64 {
        let r = random_sets(50_000 + k, 200);
        largest = largest.max(r.domain.len());
        if let Err(e) = compare_sets(&r) {
            failures.push(format!("state {k}: {e}"));
        }
    }
    let pass = failures.is_empty();
    report(
        4,
        "set construction vs exhaustive",
        pass,
        format!("{} mismatches over 200 states, largest grid {largest}", failures.len()),
    );
    assert!(pass, "{failures:?}");
}

#[test]
fn criterion_5_monotone_sets_and_intervals() {
    let s = synthetic_suite();
    let pass = s.monotonicity_failures.is_empty() && s.safeopt.len() == 50;
    report(
        5,
        "nested intervals and growing safe sets",
        pass,
        format!("{} runs with a violated inclusion {:?}", s.monotonicity_failures.len(), s.monotonicity_failures),
    );
    assert!(pass);
}

#[test]
fn criterion_6_gp_ucb_is_unsafe() {
    let s = synthetic_suite();
    let ucb = s.ucb.iter().filter(|r| r.violations > 0).count();
    let safe = s.safeopt.iter().filter(|r| r.violations > 0).count();
    let pass = ucb >= 40 && safe == 0;
    report(
        6,
        "GP-UCB contrast",
        pass,
        format!("GP-UCB unsafe in {ucb}/50 seeds, SafeOpt-MC in {safe}/50"),
    );
    assert!(pass);
}

#[test]
fn criterion_7_step_response_tuning() {
    let resolved = load("step_response.toml").resolve().unwrap();
    let runs: Vec<RunSummary> = resolved.seeds.iter().map(|&s| resolved.run_seed(s).unwrap().summary).collect();
    let mut gains: Vec<f64> = runs.iter().map(|r| r.improvement.unwrap()).collect();
    gains.sort_by(f64::total_cmp);
    let median = (gains[9] + gains[10]) / 2.0;
    let violations: usize = runs.iter().map(|r| r.violations).sum();
    let pass = runs.len() == 20 && median >= 0.15 && violations == 0;
    report(
        7,
        "step-response RMSE improvement",
        pass,
        format!(
            "median improvement {:.1}% over {} seeds (range {:.1}%..{:.1}%), {violations} rate violations",
            100.0 * median,
            runs.len(),
            100.0 * gains[0],
            100.0 * gains[gains.len() - 1]
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_8_context_transfer_and_sweep() {
    let resolved = load("circle_context.toml").resolve().unwrap();
    let ResolvedBenchmark::Plant { plant, speed, .. } = &resolved.bench else {
        unreachable!()
    };

    // variance transfer after the first context
    let mut opt = resolved.safeopt(None).unwrap();
    let mut objective = PlantObjective::new(plant.clone(), *speed, 0);
    opt.run(&mut objective, resolved.config.iterations).unwrap();
    let safe = opt.sets().unwrap().safe.clone();
    let prior = resolved.kernel.prior_std(0).powi(2);
    let reduced = safe
        .iter()
        .filter(|&&a| {
            let mut x = opt.domain().point(a).to_vec();
            x.push(1.25);
            opt.model().predict(&x, 0).unwrap().variance <= 0.9 * prior
        })
        .count();
    let share = reduced as f64 / safe.len() as f64;

    // sweep
    let sweeps: Vec<RunSummary> = [0u64, 1, 2].iter().map(|&s| resolved.run_seed(s).unwrap().summary).collect();
    let violations: usize = sweeps.iter().map(|r| r.violations).sum();
    let reached: Vec<f64> = sweeps.iter().map(|r| r.contexts.last().unwrap().context[0]).collect();
    let completed = sweeps.iter().all(|r| r.status == RunStatus::Completed);
    let pass = share >= 0.5 && violations == 0 && completed && reached.iter().all(|z| *z > 1.0);
    report(
        8,
        "context transfer and speed sweep",
        pass,
        format!(
            "variance at 1.25 reduced by >=10% on {reduced}/{} safe points ({:.0}%); sweeps reached {reached:?} m/s with {violations} violations",
            safe.len(),
            100.0 * share
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_9_deterministic_traces() {
    let dir = tempfile::tempdir().unwrap();
    let mut mismatches = Vec::new();
    let mut compared = 0;
    for (name, seeds) in [
        ("synthetic.toml", vec![2, 7]),
        ("synthetic_ucb.toml", vec![2]),
        ("step_response.toml", vec![0, 5]),
        ("circle_context.toml", vec![1]),
    ] {
        for seed in seeds {
            let outs: Vec<PathBuf> = ["a", "b"]
                .iter()
                .map(|tag| {
                    let out = dir.path().join(format!("{name}-{seed}-{tag}"));
                    let cfg = Overrides {
                        seed: Some(seed),
                        output_dir: Some(out.clone()),
                    }
                    .apply(load(name));
                    run_experiment(&cfg).unwrap();
                    out
                })
                .collect();
            let a = std::fs::read(trace_path(&outs[0], seed)).unwrap();
            let b = std::fs::read(trace_path(&outs[1], seed)).unwrap();
            compared += 1;
            if a != b || a.is_empty() {
                mismatches.push(format!("{name} seed {seed}"));
            }
        }
    }
    let pass = mismatches.is_empty();
    report(
        9,
        "byte-identical reruns",
        pass,
        format!("{compared} config/seed pairs compared, mismatches {mismatches:?}"),
    );
    assert!(pass);
}
