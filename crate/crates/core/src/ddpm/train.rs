use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{draw_noise, x0_loss_and_grad};
use super::net::Denoise;
use super::optim::{AdamW, AdamWConfig};
use super::schedule::DiffusionSchedule;
use super::tensor::RefineSample;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub iterations: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub optimizer: AdamWConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { iterations: 1000, batch_size: 1, seed: 0, optimizer: AdamWConfig::default() }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<M> {
    pub model: M,
    /// Batch loss before each update.
    pub losses: Vec<f64>,
    /// Iteration at which the loss or gradient stopped being finite. The
    /// returned model holds the parameters from before that iteration.
    pub diverged_at: Option<usize>,
}

/// AdamW on the target-prediction loss. Batches are drawn with replacement;
/// everything random comes from one generator seeded with `config.seed`.
pub fn train<M: Denoise>(mut model: M, dataset: &[RefineSample], schedule: &DiffusionSchedule, config: &TrainConfig) -> Result<TrainOutcome<M>> {
    if dataset.is_empty() {
        return Err(Error::Empty { what: "training set" });
    }
    if config.batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut opt = AdamW::new(config.optimizer, model.num_params());
    let mut losses = Vec::with_capacity(config.iterations);
    let mut batch = Vec::with_capacity(config.batch_size);
    for it in 0..config.iterations {
        batch.clear();
        for _ in 0..config.batch_size {
            batch.push(dataset[rng.gen_range(0..dataset.len())].clone());
        }
        let draws = draw_noise(&batch, schedule, &mut rng);
        let (loss, grad) = x0_loss_and_grad(&model, &batch, &draws, schedule)?;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Ok(TrainOutcome { model, losses, diverged_at: Some(it) });
        }
        losses.push(loss);
        opt.step(model.params_mut(), &grad);
    }
    Ok(TrainOutcome { model, losses, diverged_at: None })
}
