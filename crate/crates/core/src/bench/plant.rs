//! Two-axis position loop with a lagged acceleration actuator.
//!
//! The closed-loop law commands
//!
//! ```text
//! acc_cmd = (x_des - x_meas) / tau^2 + (2 zeta / tau) (v_des - v_meas) [+ acc_des]
//! ```
//!
//! from noisy position and velocity measurements. The achieved acceleration
//! follows `acc_cmd` through a first-order lag and is perturbed by a random
//! disturbance. Tilt is `acc / g` (small-angle), and the angular-rate signal is
//! its finite-difference derivative in the body frame, which for the circle
//! yaws with the reference.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};

/// `(tau, zeta)` used as the reference controller.
pub const INITIAL_GAINS: [f64; 2] = [0.9, 0.8];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reference {
    /// Step of `distance` metres along x at t = 0; the rate signal is the
    /// lateral (roll) axis only.
    Step { distance: f64 },
    /// Counter-clockwise circle through `(radius, 0)`; the rate signal is the
    /// larger of both body axes.
    Circle {
        radius: f64,
        speed: f64,
        /// Add the reference acceleration to the command.
        feedforward: bool,
    },
}

/// Sign of the performance output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PerformanceConvention {
    /// `f = fraction * C_ref - C`: larger is better, positive once the cost
    /// beats the target fraction of the reference cost.
    #[default]
    NegatedCost,
    /// `f = C - fraction * C_ref`, the formula as literally printed.
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlantSpec {
    pub dt: f64,
    pub steps: usize,
    /// Actuation lag time constant in seconds; zero applies commands instantly.
    pub actuation_lag: f64,
    /// Std of the additive acceleration disturbance (m/s^2).
    pub disturbance_std: f64,
    pub position_noise_std: f64,
    pub velocity_noise_std: f64,
    pub gravity: f64,
    /// Rate bound in rad/s; the rate constraint is `rate_limit - max rate`.
    pub rate_limit: f64,
    /// RMSE bound in metres for the circle; `rmse_limit - C`.
    pub rmse_limit: f64,
    /// Cost `C_ref` the performance output is measured against.
    pub reference_cost: f64,
    pub improvement_fraction: f64,
    pub convention: PerformanceConvention,
    /// Position magnitude treated as divergence.
    pub divergence_bound: f64,
    /// Cost and rate reported for a diverged run.
    pub saturated_cost: f64,
    pub saturated_rate: f64,
    pub record_trajectory: bool,
}

impl Default for PlantSpec {
    fn default() -> Self {
        Self {
            dt: 1.0 / 70.0,
            steps: 350,
            actuation_lag: 0.15,
            disturbance_std: 0.2,
            position_noise_std: 0.02,
            velocity_noise_std: 0.05,
            gravity: 9.81,
            rate_limit: 0.5,
            rmse_limit: 0.2,
            reference_cost: 0.0,
            improvement_fraction: 0.75,
            convention: PerformanceConvention::NegatedCost,
            divergence_bound: 100.0,
            saturated_cost: 100.0,
            saturated_rate: 100.0,
            record_trajectory: false,
        }
    }
}

impl PlantSpec {
    /// Same plant with every noise source switched off.
    pub fn noiseless(&self) -> Self {
        Self {
            disturbance_std: 0.0,
            position_noise_std: 0.0,
            velocity_noise_std: 0.0,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        let nonneg = |v: f64| v >= 0.0 && v.is_finite();
        if !pos(self.dt) || self.steps == 0 || !pos(self.gravity) {
            return Err(contract("plant dt, steps and gravity must be positive"));
        }
        if ![
            self.actuation_lag,
            self.disturbance_std,
            self.position_noise_std,
            self.velocity_noise_std,
            self.reference_cost,
        ]
        .iter()
        .all(|v| nonneg(*v))
        {
            return Err(contract("plant lag, noise levels and reference cost must be non-negative"));
        }
        if ![self.rate_limit, self.rmse_limit, self.divergence_bound, self.saturated_cost, self.saturated_rate]
            .iter()
            .all(|v| pos(*v))
        {
            return Err(contract("plant limits and saturation values must be positive"));
        }
        if !(self.improvement_fraction.is_finite()) {
            return Err(contract("improvement fraction must be finite"));
        }
        Ok(())
    }

    fn performance(&self, cost: f64) -> f64 {
        let target = self.improvement_fraction * self.reference_cost;
        match self.convention {
            PerformanceConvention::NegatedCost => target - cost,
            PerformanceConvention::Literal => cost - target,
        }
    }

    /// Sets `reference_cost` to the noise-free step cost at `gains`.
    pub fn calibrated_step(mut self, gains: [f64; 2]) -> Result<Self> {
        self.reference_cost = simulate(&self.noiseless(), gains, Reference::Step { distance: 1.0 }, 0)?.cost;
        Ok(self)
    }

    /// Sets `reference_cost` to the noise-free circle cost at `gains` and `speed`.
    pub fn calibrated_circle(mut self, gains: [f64; 2], speed: f64) -> Result<Self> {
        let r = Reference::Circle {
            radius: 1.0,
            speed,
            feedforward: true,
        };
        self.reference_cost = simulate(&self.noiseless(), gains, r, 0)?.cost;
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationResult {
    /// `f(a)` under the plant's convention.
    pub performance: f64,
    /// Constraint values, `>= 0` means satisfied.
    pub constraints: Vec<f64>,
    /// Position RMSE in metres.
    pub cost: f64,
    /// Largest angular-rate magnitude in rad/s.
    pub max_rate: f64,
    pub unstable: bool,
    /// Positions after each step, when recording is enabled.
    pub trajectory: Option<Vec<[f64; 2]>>,
}

impl EvaluationResult {
    /// `[f, g_1, ..]`, the vector an optimizer observes.
    pub fn outputs(&self) -> Vec<f64> {
        let mut v = vec![self.performance];
        v.extend_from_slice(&self.constraints);
        v
    }
}

struct Raw {
    cost: f64,
    max_rate: f64,
    unstable: bool,
    trajectory: Option<Vec<[f64; 2]>>,
}

fn rotate(v: [f64; 2], angle: f64) -> [f64; 2] {
    let (s, c) = angle.sin_cos();
    [c * v[0] + s * v[1], -s * v[0] + c * v[1]]
}

fn simulate(plant: &PlantSpec, gains: [f64; 2], reference: Reference, seed: u64) -> Result<Raw> {
    plant.validate()?;
    let [tau, zeta] = gains;
    if !(tau > 0.0 && zeta > 0.0 && tau.is_finite() && zeta.is_finite()) {
        return Err(contract(format!("gains must be positive, got tau = {tau}, zeta = {zeta}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = |std: f64| if std > 0.0 { std * rng.sample::<f64, _>(StandardNormal) } else { 0.0 };
    let dt = plant.dt;

    // desired position, velocity, acceleration and body yaw at time t
    let desired = |t: f64| -> ([f64; 2], [f64; 2], [f64; 2], f64) {
        match reference {
            Reference::Step { distance } => ([distance, 0.0], [0.0; 2], [0.0; 2], 0.0),
            Reference::Circle { radius, speed, .. } => {
                let w = speed / radius;
                let (s, c) = (w * t).sin_cos();
                (
                    [radius * c, radius * s],
                    [-radius * w * s, radius * w * c],
                    [-radius * w * w * c, -radius * w * w * s],
                    w * t,
                )
            }
        }
    };
    let (feedforward, both_axes) = match reference {
        Reference::Step { .. } => (false, false),
        Reference::Circle { feedforward, .. } => (feedforward, true),
    };

    let (mut p, mut v, a0, _) = desired(0.0);
    // start the actuator on the periodic steady state of the lagged
    // feedforward, otherwise the first samples carry a large start-up rate
    let mut acc = match reference {
        Reference::Circle { radius, speed, .. } if feedforward => {
            let wt = speed / radius * plant.actuation_lag;
            let k = 1.0 / (1.0 + wt * wt);
            [k * (a0[0] + wt * a0[1]), k * (a0[1] - wt * a0[0])]
        }
        _ => [0.0; 2],
    };
    if let Reference::Step { .. } = reference {
        p = [0.0; 2];
        v = [0.0; 2];
    }
    let mut tilt = rotate(acc, 0.0).map(|x| x / plant.gravity);
    let mut sq_err = 0.0;
    let mut max_rate = 0.0f64;
    let mut trajectory = plant.record_trajectory.then(|| Vec::with_capacity(plant.steps));

    for k in 0..plant.steps {
        let t = k as f64 * dt;
        let (pd, vd, ad, _) = desired(t);
        let mut cmd = [0.0; 2];
        for d in 0..2 {
            let pm = p[d] + normal(plant.position_noise_std);
            let vm = v[d] + normal(plant.velocity_noise_std);
            cmd[d] = (pd[d] - pm) / (tau * tau) + 2.0 * zeta / tau * (vd[d] - vm);
            if feedforward {
                cmd[d] += ad[d];
            }
        }
        for d in 0..2 {
            acc[d] = if plant.actuation_lag > 0.0 {
                acc[d] + dt * (cmd[d] - acc[d]) / plant.actuation_lag
            } else {
                cmd[d]
            };
            v[d] += dt * (acc[d] + normal(plant.disturbance_std));
            p[d] += dt * v[d];
        }
        let (pd_next, _, _, yaw_next) = desired(t + dt);
        let new_tilt = rotate(acc, yaw_next).map(|x| x / plant.gravity);
        let rate_x = (new_tilt[0] - tilt[0]).abs() / dt;
        let rate_y = (new_tilt[1] - tilt[1]).abs() / dt;
        max_rate = max_rate.max(if both_axes { rate_x.max(rate_y) } else { rate_y });
        tilt = new_tilt;
        sq_err += (p[0] - pd_next[0]).powi(2) + (p[1] - pd_next[1]).powi(2);
        if let Some(tr) = trajectory.as_mut() {
            tr.push(p);
        }
        let diverged = !(p[0].is_finite() && p[1].is_finite())
            || p[0].abs().max(p[1].abs()) > plant.divergence_bound
            || !max_rate.is_finite();
        if diverged {
            return Ok(Raw {
                cost: plant.saturated_cost,
                max_rate: plant.saturated_rate,
                unstable: true,
                trajectory,
            });
        }
    }
    Ok(Raw {
        cost: (sq_err / plant.steps as f64).sqrt(),
        max_rate,
        unstable: false,
        trajectory,
    })
}

fn gains(a: &[f64]) -> Result<[f64; 2]> {
    <[f64; 2]>::try_from(a).map_err(|_| contract(format!("expected (tau, zeta), got {a:?}")))
}

/// Step of 1 m. Outputs `f` and the rate constraint.
pub fn simulate_step(plant: &PlantSpec, a: &[f64], seed: u64) -> Result<EvaluationResult> {
    let raw = simulate(plant, gains(a)?, Reference::Step { distance: 1.0 }, seed)?;
    Ok(EvaluationResult {
        performance: plant.performance(raw.cost),
        constraints: vec![plant.rate_limit - raw.max_rate],
        cost: raw.cost,
        max_rate: raw.max_rate,
        unstable: raw.unstable,
        trajectory: raw.trajectory,
    })
}

/// Unit circle at `speed` m/s. Outputs `f`, the RMSE constraint and the rate
/// constraint.
pub fn simulate_circle(plant: &PlantSpec, a: &[f64], speed: f64, seed: u64) -> Result<EvaluationResult> {
    if !(speed >= 0.0 && speed.is_finite()) {
        return Err(contract(format!("speed must be non-negative, got {speed}")));
    }
    let reference = Reference::Circle {
        radius: 1.0,
        speed,
        feedforward: true,
    };
    let raw = simulate(plant, gains(a)?, reference, seed)?;
    Ok(EvaluationResult {
        performance: plant.performance(raw.cost),
        constraints: vec![plant.rmse_limit - raw.cost, plant.rate_limit - raw.max_rate],
        cost: raw.cost,
        max_rate: raw.max_rate,
        unstable: raw.unstable,
        trajectory: raw.trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_performance_under_both_conventions() {
        let plant = PlantSpec::default().calibrated_step(INITIAL_GAINS).unwrap();
        let c0 = plant.reference_cost;
        let quiet = plant.noiseless();
        let r = simulate_step(&quiet, &INITIAL_GAINS, 0).unwrap();
        assert_eq!(r.cost, c0);
        assert!((r.performance + 0.25 * c0).abs() < 1e-12);
        let literal = PlantSpec {
            convention: PerformanceConvention::Literal,
            ..quiet
        };
        let r = simulate_step(&literal, &INITIAL_GAINS, 0).unwrap();
        assert!((r.performance - 0.25 * c0).abs() < 1e-12);
    }

    #[test]
    fn sluggish_gains_have_large_cost_and_tiny_rates() {
        let plant = PlantSpec::default();
        let r = simulate_step(&plant, &[5.0, 1.0], 1).unwrap();
        let fast = simulate_step(&plant, &[0.9, 0.8], 1).unwrap();
        assert!(r.cost > 1.5 * fast.cost);
        assert!(r.constraints[0] > 0.45);
    }

    #[test]
    fn high_gains_amplify_noise() {
        let plant = PlantSpec::default();
        let r = simulate_step(&plant, &[0.3, 1.4], 1).unwrap();
        assert!(r.constraints[0] < 0.0, "{r:?}");
    }

    #[test]
    fn critically_damped_without_lag_does_not_overshoot() {
        let plant = PlantSpec {
            actuation_lag: 0.0,
            record_trajectory: true,
            ..PlantSpec::default().noiseless()
        };
        let r = simulate_step(&plant, &[0.5, 1.0], 0).unwrap();
        let peak = r.trajectory.unwrap().iter().map(|p| p[0]).fold(f64::MIN, f64::max);
        assert!(peak <= 1.0 + 1e-3, "{peak}");
    }

    #[test]
    fn deterministic_replay() {
        let plant = PlantSpec::default();
        let a = simulate_circle(&plant, &[0.6, 0.7], 1.0, 42).unwrap();
        let b = simulate_circle(&plant, &[0.6, 0.7], 1.0, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn stationary_circle_is_safe() {
        let plant = PlantSpec::default();
        let r = simulate_circle(&plant, &[0.9, 0.8], 0.0, 3).unwrap();
        assert!(r.cost < 0.05);
        assert!(r.constraints.iter().all(|g| *g > 0.0), "{r:?}");
    }

    #[test]
    fn divergence_is_saturated() {
        let plant = PlantSpec {
            dt: 0.5,
            ..PlantSpec::default()
        };
        let r = simulate_step(&plant, &[0.05, 0.1], 0).unwrap();
        assert!(r.unstable);
        assert!(r.outputs().iter().all(|v| v.is_finite()));
        assert!(r.constraints[0] < 0.0);
    }

    #[test]
    fn rejects_bad_gains() {
        assert!(simulate_step(&PlantSpec::default(), &[0.0, 1.0], 0).is_err());
        assert!(simulate_step(&PlantSpec::default(), &[1.0], 0).is_err());
    }
}
