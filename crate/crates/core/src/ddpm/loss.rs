use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::net::{Denoise, DenoiseInput};
use super::schedule::{forward_sample, DiffusionSchedule};
use super::tensor::{RefineSample, Stack};
use crate::error::{Error, Result};

/// Diffusion step and injected noise for one sample of a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseDraw {
    pub t: usize,
    pub noise: Vec<f64>,
}

/// Per sample: `t` uniform in `1..=T`, then standard normal noise shaped
/// like the target.
pub fn draw_noise(batch: &[RefineSample], schedule: &DiffusionSchedule, rng: &mut impl Rng) -> Vec<NoiseDraw> {
    batch
        .iter()
        .map(|s| {
            let t = rng.gen_range(1..=schedule.steps());
            let noise = (0..s.target.data.len()).map(|_| StandardNormal.sample(rng)).collect();
            NoiseDraw { t, noise }
        })
        .collect()
}

fn check_batch(batch: &[RefineSample], draws: &[NoiseDraw]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::Empty { what: "training batch" });
    }
    if batch.len() != draws.len() {
        return Err(Error::Shape("one noise draw per sample is required".into()));
    }
    Ok(())
}

fn noisy_state(sample: &RefineSample, draw: &NoiseDraw, schedule: &DiffusionSchedule) -> Result<Stack> {
    let s = &sample.target;
    Stack::new(s.channels, s.rows, s.cols, forward_sample(&s.data, draw.t, schedule, &draw.noise)?)
}

fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

/// Mean over the batch of the per-element squared error between the target
/// and the denoiser's prediction of it, with fixed noise draws. Returns the
/// loss and its gradient with respect to the parameters.
pub fn x0_loss_and_grad<M: Denoise>(
    model: &M,
    batch: &[RefineSample],
    draws: &[NoiseDraw],
    schedule: &DiffusionSchedule,
) -> Result<(f64, Vec<f64>)> {
    check_batch(batch, draws)?;
    let mut grad = alloc::vec![0.0; model.num_params()];
    let mut total = 0.0;
    let nb = batch.len() as f64;
    for (sample, draw) in batch.iter().zip(draws) {
        let y_t = noisy_state(sample, draw, schedule)?;
        let input = DenoiseInput { y_t: &y_t, condition: &sample.condition, t: draw.t, k: sample.lead_step };
        let (out, cache) = model.forward_cached(&input)?;
        let n = out.data.len() as f64;
        total += mse(&out.data, &sample.target.data);
        let g = out.data.iter().zip(&sample.target.data).map(|(o, y)| 2.0 * (o - y) / (n * nb)).collect();
        model.backward(&cache, &Stack { data: g, ..out }, &mut grad);
    }
    Ok((total / nb, grad))
}

/// Target-prediction loss for one batch, drawing `t` and the noise from `rng`.
pub fn x0_loss<M: Denoise>(model: &M, batch: &[RefineSample], schedule: &DiffusionSchedule, rng: &mut impl Rng) -> Result<f64> {
    let draws = draw_noise(batch, schedule, rng);
    check_batch(batch, &draws)?;
    let mut total = 0.0;
    for (sample, draw) in batch.iter().zip(&draws) {
        let y_t = noisy_state(sample, draw, schedule)?;
        let out = model.denoise(&DenoiseInput { y_t: &y_t, condition: &sample.condition, t: draw.t, k: sample.lead_step })?;
        total += mse(&out.data, &sample.target.data);
    }
    Ok(total / batch.len() as f64)
}

/// Noise-prediction loss: the model output is compared with the injected noise.
pub fn eps_loss<M: Denoise>(model: &M, batch: &[RefineSample], schedule: &DiffusionSchedule, rng: &mut impl Rng) -> Result<f64> {
    let draws = draw_noise(batch, schedule, rng);
    check_batch(batch, &draws)?;
    let mut total = 0.0;
    for (sample, draw) in batch.iter().zip(&draws) {
        let y_t = noisy_state(sample, draw, schedule)?;
        let out = model.denoise(&DenoiseInput { y_t: &y_t, condition: &sample.condition, t: draw.t, k: sample.lead_step })?;
        total += mse(&out.data, &draw.noise);
    }
    Ok(total / batch.len() as f64)
}
