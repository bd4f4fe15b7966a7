use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::net::{Denoise, DenoiseInput};
use super::schedule::DiffusionSchedule;
use super::tensor::{Stack, Standardizer};
use crate::error::{Error, Result};
use crate::grid::FieldSet;

/// `(coefficient of x0_hat, coefficient of y_t, variance)` of q(y_{t−1} | y_t, x0).
pub fn posterior_coefficients(t: usize, schedule: &DiffusionSchedule) -> Result<(f64, f64, f64)> {
    schedule.check_step(t)?;
    let beta = schedule.beta(t);
    let ab = schedule.alpha_bar(t);
    let ab_prev = schedule.alpha_bar(t - 1);
    let c0 = libm::sqrt(ab_prev) * beta / (1.0 - ab);
    let ct = libm::sqrt(schedule.alpha(t)) * (1.0 - ab_prev) / (1.0 - ab);
    let var = beta * (1.0 - ab_prev) / (1.0 - ab);
    Ok((c0, ct, var))
}

/// One reverse step: posterior mean plus `√variance · noise`.
pub fn posterior_step(y_t: &[f64], x0_hat: &[f64], t: usize, schedule: &DiffusionSchedule, noise: &[f64]) -> Result<Vec<f64>> {
    let (c0, ct, var) = posterior_coefficients(t, schedule)?;
    if y_t.len() != x0_hat.len() || y_t.len() != noise.len() {
        return Err(Error::Shape("posterior step inputs differ in length".into()));
    }
    let sd = libm::sqrt(var);
    Ok(y_t.iter().zip(x0_hat).zip(noise).map(|((y, x), e)| c0 * x + ct * y + sd * e).collect())
}

/// Ancestral sampling from `y_T ~ N(0, I)` down to `y_0`, in standardised units.
/// The last step has zero variance and returns the final prediction itself.
pub fn sample<M: Denoise>(
    model: &M,
    channels: usize,
    condition: &Stack,
    k: u32,
    schedule: &DiffusionSchedule,
    rng: &mut impl Rng,
) -> Result<Stack> {
    let n = channels * condition.plane_len();
    let mut y = Stack::new(channels, condition.rows, condition.cols, (0..n).map(|_| StandardNormal.sample(rng)).collect())?;
    for t in (1..=schedule.steps()).rev() {
        let x0 = model.denoise(&DenoiseInput { y_t: &y, condition, t, k })?;
        if x0.data.len() != n {
            return Err(Error::Shape("denoiser output does not match the state".into()));
        }
        let noise: Vec<f64> = if t > 1 { (0..n).map(|_| StandardNormal.sample(rng)).collect() } else { alloc::vec![0.0; n] };
        y.data = posterior_step(&y.data, &x0.data, t, schedule, &noise)?;
    }
    Ok(y)
}

/// [`sample`] from a condition in physical units; the output has the
/// standardizer's variables at the condition's valid time.
pub fn sample_fieldset<M: Denoise>(
    model: &M,
    standardizer: &Standardizer,
    condition: &FieldSet,
    k: u32,
    schedule: &DiffusionSchedule,
    rng: &mut impl Rng,
) -> Result<FieldSet> {
    let grid = *condition.grid().ok_or(Error::Empty { what: "condition" })?;
    let cond = standardizer.encode(condition)?;
    let out = sample(model, standardizer.stats.len(), &cond, k, schedule, rng)?;
    standardizer.decode(&out, grid, condition.valid_time(), condition.lead_hours())
}
