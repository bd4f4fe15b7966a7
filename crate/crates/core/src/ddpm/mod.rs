//! Conditional denoising diffusion for refining smooth forecasts.
//!
//! The forward process adds Gaussian noise under a fixed variance schedule.
//! The reverse process uses a network that predicts the clean target from the
//! noisy state, the smooth forecast (stacked as extra input channels), the
//! diffusion step `t` and the forecast lead step `k`.

mod gradcheck;
mod loss;
mod net;
mod optim;
mod sample;
mod schedule;
mod tensor;
mod train;

pub use gradcheck::{grad_check, GradCheckReport};
pub use loss::{draw_noise, eps_loss, x0_loss, x0_loss_and_grad, NoiseDraw};
pub use net::{Denoise, DenoiseInput, Denoiser, DenoiserConfig, LinearStub};
pub use optim::{AdamW, AdamWConfig};
pub use sample::{posterior_coefficients, posterior_step, sample, sample_fieldset};
pub use schedule::{forward_sample, forward_step, linear_schedule, respaced_schedule, DiffusionSchedule};
pub use tensor::{RefineSample, Stack, Standardizer, VariableStats};
pub use train::{train, TrainConfig, TrainOutcome};
