//! TOML run configuration for training and tracking. Every key is optional;
//! missing keys take the library defaults and unknown keys are rejected.

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use stormscope_core::ddpm::{linear_schedule, respaced_schedule, AdamWConfig, DenoiserConfig, DiffusionSchedule, TrainConfig};
use stormscope_core::tracker::TrackerConfig;

use crate::error::{IoError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ScheduleConfig {
    /// The 1000-step linear chain subsampled to `steps`.
    Respaced { steps: usize },
    Linear { steps: usize, beta_start: f64, beta_end: f64 },
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig::Respaced { steps: 50 }
    }
}

impl ScheduleConfig {
    pub fn build(&self) -> Result<DiffusionSchedule> {
        Ok(match *self {
            ScheduleConfig::Respaced { steps } => respaced_schedule(steps)?,
            ScheduleConfig::Linear { steps, beta_start, beta_end } => linear_schedule(steps, beta_start, beta_end)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub width: usize,
    pub blocks: usize,
    pub embed_dim: usize,
    pub wrap_rows: bool,
    pub init_seed: u64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let d = DenoiserConfig::default();
        Self { width: d.width, blocks: d.blocks, embed_dim: d.embed_dim, wrap_rows: d.wrap_rows, init_seed: 0 }
    }
}

impl ModelSection {
    pub fn denoiser(&self, channels: usize) -> DenoiserConfig {
        DenoiserConfig {
            channels,
            cond_channels: channels,
            width: self.width,
            blocks: self.blocks,
            embed_dim: self.embed_dim,
            wrap_rows: self.wrap_rows,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub iterations: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub weight_decay: f64,
    pub eps: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        let o = t.optimizer;
        Self {
            iterations: t.iterations,
            batch_size: t.batch_size,
            seed: t.seed,
            lr: o.lr,
            beta1: o.beta1,
            beta2: o.beta2,
            weight_decay: o.weight_decay,
            eps: o.eps,
        }
    }
}

impl TrainSection {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            iterations: self.iterations,
            batch_size: self.batch_size,
            seed: self.seed,
            optimizer: AdamWConfig { lr: self.lr, beta1: self.beta1, beta2: self.beta2, weight_decay: self.weight_decay, eps: self.eps },
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingFile {
    pub model: ModelSection,
    pub schedule: ScheduleConfig,
    pub train: TrainSection,
}

fn parse<T: DeserializeOwned>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| IoError::Config(e.to_string()))
}

pub fn parse_training(text: &str) -> Result<TrainingFile> {
    parse(text)
}

/// Tracker settings over the library defaults.
pub fn parse_tracker(text: &str) -> Result<TrackerConfig> {
    let mut table = toml::Table::try_from(TrackerConfig::default()).map_err(|e| IoError::Config(e.to_string()))?;
    let user: toml::Table = parse(text)?;
    for (k, v) in user {
        if !table.contains_key(&k) {
            return Err(IoError::Config(format!("unknown tracker key {k:?}")));
        }
        table.insert(k, v);
    }
    let cfg: TrackerConfig = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| IoError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn to_toml<T: Serialize>(value: &T) -> Result<String> {
    toml::to_string(value).map_err(|e| IoError::Config(e.to_string()))
}
