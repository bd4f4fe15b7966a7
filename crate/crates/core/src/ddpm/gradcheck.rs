use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{draw_noise, x0_loss_and_grad};
use super::net::Denoise;
use super::schedule::DiffusionSchedule;
use super::tensor::RefineSample;
use crate::error::Result;

/// Gradients below this magnitude are compared in absolute terms.
const GRAD_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_error: f64,
    pub worst_param: usize,
}

/// Compares the analytic gradient of the target-prediction loss with
/// central differences of step `h` on `n_params` randomly chosen parameters
/// (all of them if the model has fewer). Noise draws are fixed by `seed`.
pub fn grad_check<M: Denoise>(
    model: &mut M,
    batch: &[RefineSample],
    schedule: &DiffusionSchedule,
    seed: u64,
    n_params: usize,
    h: f64,
) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws = draw_noise(batch, schedule, &mut rng);
    let (_, grad) = x0_loss_and_grad(model, batch, &draws, schedule)?;
    let total = model.num_params();
    let picks = rand::seq::index::sample(&mut rng, total, n_params.min(total));
    let mut report = GradCheckReport { checked: 0, max_rel_error: 0.0, worst_param: 0 };
    for i in picks.iter() {
        let orig = model.params()[i];
        model.params_mut()[i] = orig + h;
        let (up, _) = x0_loss_and_grad(model, batch, &draws, schedule)?;
        model.params_mut()[i] = orig - h;
        let (down, _) = x0_loss_and_grad(model, batch, &draws, schedule)?;
        model.params_mut()[i] = orig;
        let numeric = (up - down) / (2.0 * h);
        let err = libm::fabs(numeric - grad[i]) / libm::fabs(numeric).max(libm::fabs(grad[i])).max(GRAD_FLOOR);
        report.checked += 1;
        if err > report.max_rel_error {
            report.max_rel_error = err;
            report.worst_param = i;
        }
    }
    Ok(report)
}
