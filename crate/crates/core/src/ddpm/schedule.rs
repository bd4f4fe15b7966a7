use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Variance schedule over `T` steps, indexed from 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionSchedule {
    beta: Vec<f64>,
    alpha_bar: Vec<f64>,
}

/// Linearly spaced β from `beta_start` to `beta_end`.
pub fn linear_schedule(steps: usize, beta_start: f64, beta_end: f64) -> Result<DiffusionSchedule> {
    if steps == 0 {
        return Err(Error::InvalidArgument("schedule needs at least one step".into()));
    }
    if !(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0) {
        return Err(Error::InvalidArgument(format!("need 0 < beta_start <= beta_end < 1, got {beta_start}, {beta_end}")));
    }
    let beta: Vec<f64> = (0..steps)
        .map(|i| if steps == 1 { beta_start } else { beta_start + (beta_end - beta_start) * i as f64 / (steps - 1) as f64 })
        .collect();
    DiffusionSchedule::from_betas(beta)
}

/// The 1000-step linear schedule `[1e-4, 0.02]` respaced to `steps` steps:
/// ᾱ'ᵢ = ᾱ at step `round(i·1000/steps)` of the long chain, and
/// β'ᵢ = 1 − ᾱ'ᵢ/ᾱ'ᵢ₋₁. Short chains then end as close to pure noise as the
/// long one.
pub fn respaced_schedule(steps: usize) -> Result<DiffusionSchedule> {
    const LONG: usize = 1000;
    if steps == 0 || steps > LONG {
        return Err(Error::InvalidArgument(format!("respaced schedule needs 1..={LONG} steps, got {steps}")));
    }
    let long = linear_schedule(LONG, 1e-4, 0.02)?;
    let mut prev = 1.0;
    let mut beta = Vec::with_capacity(steps);
    for i in 1..=steps {
        let ab = long.alpha_bar(libm::round(i as f64 * LONG as f64 / steps as f64) as usize);
        beta.push(1.0 - ab / prev);
        prev = ab;
    }
    DiffusionSchedule::from_betas(beta)
}

impl DiffusionSchedule {
    pub fn from_betas(beta: Vec<f64>) -> Result<Self> {
        if beta.is_empty() {
            return Err(Error::InvalidArgument("schedule needs at least one step".into()));
        }
        if beta.iter().any(|b| !(*b > 0.0 && *b < 1.0)) {
            return Err(Error::InvalidArgument("every beta must lie in (0, 1)".into()));
        }
        if beta.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidArgument("betas must be non-decreasing".into()));
        }
        let mut alpha_bar = Vec::with_capacity(beta.len());
        let mut acc = 1.0;
        for b in &beta {
            acc *= 1.0 - b;
            alpha_bar.push(acc);
        }
        Ok(Self { beta, alpha_bar })
    }

    pub fn steps(&self) -> usize {
        self.beta.len()
    }

    pub fn check_step(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.steps() {
            return Err(Error::OutOfRange { what: "diffusion step", detail: format!("{t} is not in 1..={}", self.steps()) });
        }
        Ok(())
    }

    /// βₜ for `t` in `1..=T`.
    pub fn beta(&self, t: usize) -> f64 {
        self.beta[t - 1]
    }

    pub fn alpha(&self, t: usize) -> f64 {
        1.0 - self.beta[t - 1]
    }

    /// ᾱₜ, with ᾱ₀ = 1.
    pub fn alpha_bar(&self, t: usize) -> f64 {
        if t == 0 {
            1.0
        } else {
            self.alpha_bar[t - 1]
        }
    }

    pub fn betas(&self) -> &[f64] {
        &self.beta
    }
}

fn check_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("array of {} elements paired with {}", a.len(), b.len())));
    }
    Ok(())
}

/// One noising step: `√(1−βₜ)·x_prev + √βₜ·noise`.
pub fn forward_step(x_prev: &[f64], t: usize, schedule: &DiffusionSchedule, noise: &[f64]) -> Result<Vec<f64>> {
    schedule.check_step(t)?;
    check_len(x_prev, noise)?;
    let (a, b) = (libm::sqrt(schedule.alpha(t)), libm::sqrt(schedule.beta(t)));
    Ok(x_prev.iter().zip(noise).map(|(x, e)| a * x + b * e).collect())
}

/// Closed-form marginal: `√ᾱₜ·x0 + √(1−ᾱₜ)·noise`.
pub fn forward_sample(x0: &[f64], t: usize, schedule: &DiffusionSchedule, noise: &[f64]) -> Result<Vec<f64>> {
    schedule.check_step(t)?;
    check_len(x0, noise)?;
    let ab = schedule.alpha_bar(t);
    let (a, b) = (libm::sqrt(ab), libm::sqrt(1.0 - ab));
    Ok(x0.iter().zip(noise).map(|(x, e)| a * x + b * e).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn alpha_bar_examples() {
        let s = linear_schedule(1, 0.5, 0.5).unwrap();
        assert_eq!(s.alpha_bar(1), 0.5);
        let c = linear_schedule(7, 0.1, 0.1).unwrap();
        assert!((c.alpha_bar(7) - 0.9f64.powi(7)).abs() < 1e-15);
        let long = linear_schedule(1000, 1e-4, 0.02).unwrap();
        assert!(long.alpha_bar(1000) < 1e-4);
        let short = respaced_schedule(50).unwrap();
        assert!((short.alpha_bar(50) - long.alpha_bar(1000)).abs() < 1e-15);
        assert!((short.alpha_bar(25) - long.alpha_bar(500)).abs() < 1e-15);
        assert!(respaced_schedule(1).is_ok() && respaced_schedule(1001).is_err());
        assert!(linear_schedule(10, 0.2, 0.1).is_err());
        assert!(linear_schedule(10, 0.0, 0.1).is_err());
        assert!(linear_schedule(10, 0.1, 1.0).is_err());
        assert!(linear_schedule(0, 0.1, 0.1).is_err());
    }

    #[test]
    fn trivial_steps() {
        let s = linear_schedule(10, 0.01, 0.2).unwrap();
        let x = vec![1.0, -2.0];
        assert_eq!(forward_step(&x, 3, &s, &[0.0, 0.0]).unwrap(), x.iter().map(|v| v * s.alpha(3).sqrt()).collect::<Vec<_>>());
        assert_eq!(forward_step(&[0.0], 3, &s, &[2.0]).unwrap(), vec![2.0 * s.beta(3).sqrt()]);
        assert!(forward_step(&x, 0, &s, &[0.0, 0.0]).is_err());
        assert!(forward_sample(&x, 11, &s, &[0.0, 0.0]).is_err());
        assert!(forward_sample(&x, 1, &s, &[0.0]).is_err());
        let tiny = linear_schedule(10, 1e-12, 1e-12).unwrap();
        let y = forward_sample(&x, 1, &tiny, &[1.0, 1.0]).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-5);
    }
}
