//! Posterior of a two-output GP with a cross term, checked against a dense solve.

use safeopt::gp::{GpModel, KernelSpec, Observation, SurrogateKernelSpec};
use safeopt::oracle::dense_posterior;

fn main() -> safeopt::Result<()> {
    let f = KernelSpec::matern32(1.0, vec![0.2])?;
    let g = KernelSpec::matern32(0.5, vec![0.2])?;
    let fg = KernelSpec::matern32(0.4, vec![0.2])?;
    let spec = SurrogateKernelSpec::independent(vec![f, g], vec![0.05, 0.05])?.with_cross(0, 1, fg)?;

    let data = vec![
        Observation::new(vec![0.2], 0, 0.3),
        Observation::new(vec![0.5], 0, 0.9),
        Observation::new(vec![0.35], 1, 0.1),
    ];
    let mut model = GpModel::new(spec.clone())?;
    model.condition_all(data.iter().cloned())?;

    println!("{:>5} {:>10} {:>10} {:>10} {:>10}", "a", "mean f", "std f", "mean g", "std g");
    for k in 0..=10 {
        let x = vec![k as f64 / 10.0];
        let pf = model.predict(&x, 0)?;
        let pg = model.predict(&x, 1)?;
        println!("{:>5.2} {:>10.4} {:>10.4} {:>10.4} {:>10.4}", x[0], pf.mean, pf.std(), pg.mean, pg.std());
    }

    let queries: Vec<(Vec<f64>, usize)> = (0..=20).map(|k| (vec![k as f64 / 20.0], k % 2)).collect();
    let fast = model.predict_many(&queries)?;
    let dense = dense_posterior(&spec, &data, &queries)?;
    let err = fast
        .iter()
        .zip(&dense)
        .map(|(a, b)| (a.mean - b.mean).abs().max((a.variance - b.variance).abs()))
        .fold(0.0, f64::max);
    println!("largest difference to the dense solve: {err:.2e}");
    Ok(())
}
