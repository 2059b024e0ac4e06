use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};

/// Choice of the sequence `pi_n` with `sum_n 1/pi_n = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PiRule {
    /// `pi_n = n^2 pi^2 / 6`, valid for an unbounded number of iterations.
    Basel,
    /// `pi_n = t_max`, valid when at most `t_max` iterations are run.
    Horizon { t_max: usize },
}

/// Scaling of the confidence intervals, `Q_n = mu +- sqrt(beta_n) sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BetaSchedule {
    /// Fixed `sqrt(beta)`; bounds the failure probability per iteration only.
    Constant { sqrt_beta: f64 },
    /// `beta_n = 2 log(|I| |A| pi_n / delta)`: all intervals hold jointly,
    /// for every iteration, with probability at least `1 - delta` when the
    /// surrogate is a GP sample.
    Lemma1 { delta: f64, pi: PiRule },
}

impl BetaSchedule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BetaSchedule::Constant { sqrt_beta } => {
                if !(sqrt_beta > 0.0 && sqrt_beta.is_finite()) {
                    return Err(contract(format!("sqrt_beta must be positive, got {sqrt_beta}")));
                }
            }
            BetaSchedule::Lemma1 { delta, pi } => {
                if !(delta > 0.0 && delta < 1.0) {
                    return Err(contract(format!("delta must lie in (0, 1), got {delta}")));
                }
                if let PiRule::Horizon { t_max } = pi {
                    if t_max == 0 {
                        return Err(contract("t_max must be at least 1"));
                    }
                }
            }
        }
        Ok(())
    }

    /// `beta_n` at iteration `n >= 1` for a domain of `domain_size` points and
    /// `num_outputs = q + 1` surrogate outputs.
    pub fn beta(&self, n: usize, domain_size: usize, num_outputs: usize) -> Result<f64> {
        self.validate()?;
        if n == 0 {
            return Err(contract("iterations are numbered from 1"));
        }
        match *self {
            BetaSchedule::Constant { sqrt_beta } => Ok(sqrt_beta * sqrt_beta),
            BetaSchedule::Lemma1 { delta, pi } => {
                let pi_n = match pi {
                    PiRule::Basel => (n as f64).powi(2) * PI * PI / 6.0,
                    PiRule::Horizon { t_max } => {
                        if n > t_max {
                            return Err(contract(format!(
                                "iteration {n} exceeds the horizon t_max = {t_max}"
                            )));
                        }
                        t_max as f64
                    }
                };
                Ok(2.0 * (num_outputs as f64 * domain_size as f64 * pi_n / delta).ln())
            }
        }
    }

    pub fn sqrt_beta(&self, n: usize, domain_size: usize, num_outputs: usize) -> Result<f64> {
        self.beta(n, domain_size, num_outputs).map(f64::sqrt)
    }
}

/// Free-function form of [`BetaSchedule::beta`].
pub fn beta(schedule: &BetaSchedule, n: usize, domain_size: usize, num_outputs: usize) -> Result<f64> {
    schedule.beta(n, domain_size, num_outputs)
}
