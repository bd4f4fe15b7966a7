//! Refiner parameters and training pairs in FPK1 packs.
//!
//! A parameter pack stores the flat parameter vector on a 2-row pseudo-grid,
//! padded with zeros, and keeps the network config, standardisation and β
//! schedule as JSON attributes. A training pack holds `cond:<VAR>` and
//! `target:<VAR>` arrays per time; the lead step is the lead time in 6-hour
//! steps.

use chrono::NaiveDateTime;
use stormscope_core::ddpm::{Denoise, Denoiser, DenoiserConfig, DiffusionSchedule, RefineSample, Standardizer};
use stormscope_core::{FieldSet, GridSpec, VariableId};

use crate::error::{IoError, Result};
use crate::fpk::{FieldPack, PackTime};

pub const LEAD_STEP_HOURS: u32 = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub model: Denoiser,
    pub standardizer: Standardizer,
    pub schedule: DiffusionSchedule,
}

fn attr<'a>(pack: &'a FieldPack, key: &str) -> Result<&'a str> {
    pack.attrs.get(key).map(String::as_str).ok_or_else(|| IoError::Data(format!("parameter pack lacks the {key:?} attribute")))
}

pub fn model_to_pack(saved: &SavedModel) -> Result<FieldPack> {
    let params = saved.model.params();
    let p = params.len();
    let ncols = p.div_ceil(2).max(2);
    let grid = GridSpec::new(2, ncols, 1.0, 1.0, 0.0, 360.0 / ncols as f64)?;
    let mut padded = params.to_vec();
    padded.resize(2 * ncols, 0.0);
    let mut pack = FieldPack::new(grid, vec!["params".into()]);
    pack.attrs.insert("kind".into(), "denoiser".into());
    pack.attrs.insert("num_params".into(), p.to_string());
    pack.attrs.insert("config".into(), serde_json::to_string(saved.model.config())?);
    pack.attrs.insert("standardizer".into(), serde_json::to_string(&saved.standardizer)?);
    pack.attrs.insert("betas".into(), serde_json::to_string(saved.schedule.betas())?);
    let t = chrono::NaiveDate::from_ymd_opt(2000, 1, 1).and_then(|d| d.and_hms_opt(0, 0, 0)).expect("valid date");
    pack.push_time(PackTime { valid_time: t, lead_hours: 0 }, &[&padded])?;
    Ok(pack)
}

pub fn model_from_pack(pack: &FieldPack) -> Result<SavedModel> {
    pack.validate()?;
    if pack.attrs.get("kind").map(String::as_str) != Some("denoiser") || pack.times.len() != 1 || pack.variables.len() != 1 {
        return Err(IoError::Data("not a denoiser parameter pack".into()));
    }
    let p: usize = attr(pack, "num_params")?.parse().map_err(|_| IoError::Data("bad num_params attribute".into()))?;
    let config: DenoiserConfig = serde_json::from_str(attr(pack, "config")?)?;
    let standardizer: Standardizer = serde_json::from_str(attr(pack, "standardizer")?)?;
    let betas: Vec<f64> = serde_json::from_str(attr(pack, "betas")?)?;
    let values = pack.array_f64(0, 0);
    if p > values.len() {
        return Err(IoError::Dimension(format!("{p} parameters do not fit in {} stored values", values.len())));
    }
    let model = Denoiser::from_params(config, values[..p].to_vec())?;
    if standardizer.stats.len() != config.channels {
        return Err(IoError::Dimension(format!("{} standardised variables for {} channels", standardizer.stats.len(), config.channels)));
    }
    Ok(SavedModel { model, standardizer, schedule: DiffusionSchedule::from_betas(betas)? })
}

/// A condition/target pair in physical units.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub condition: FieldSet,
    pub target: FieldSet,
    pub lead_step: u32,
}

pub fn pairs_to_pack(pairs: &[TrainingPair], variables: &[VariableId]) -> Result<FieldPack> {
    let first = pairs.first().ok_or_else(|| IoError::Data("no training pairs".into()))?;
    let grid = *first.condition.grid().ok_or_else(|| IoError::Data("empty condition".into()))?;
    let mut names: Vec<String> = variables.iter().map(|v| format!("cond:{v}")).collect();
    names.extend(variables.iter().map(|v| format!("target:{v}")));
    let mut pack = FieldPack::new(grid, names);
    pack.attrs.insert("kind".into(), "refine_pairs".into());
    for p in pairs {
        if p.lead_step == 0 {
            return Err(IoError::Data("lead step must be at least 1".into()));
        }
        let mut arrays = Vec::with_capacity(2 * variables.len());
        for fs in [&p.condition, &p.target] {
            for &v in variables {
                arrays.push(fs.require(v)?.values());
            }
        }
        pack.push_time(PackTime { valid_time: p.target.valid_time(), lead_hours: p.lead_step * LEAD_STEP_HOURS }, &arrays)?;
    }
    Ok(pack)
}

pub fn pairs_from_pack(pack: &FieldPack) -> Result<(Vec<TrainingPair>, Vec<VariableId>)> {
    let mut variables = Vec::new();
    for name in &pack.variables {
        if let Some(v) = name.strip_prefix("cond:") {
            let id: VariableId = v.parse()?;
            if pack.variable_index(&format!("target:{id}")).is_none() {
                return Err(IoError::Data(format!("condition {id} has no target array")));
            }
            variables.push(id);
        }
    }
    if variables.is_empty() {
        return Err(IoError::Data("pack has no cond:<VAR> arrays".into()));
    }
    let conds = pack.fieldsets_of(|n| n.strip_prefix("cond:").map(str::to_string))?;
    let targets = pack.fieldsets_of(|n| n.strip_prefix("target:").map(str::to_string))?;
    let mut pairs = Vec::with_capacity(conds.len());
    for (condition, target) in conds.into_iter().zip(targets) {
        let lead = target.lead_hours();
        if lead == 0 || lead % LEAD_STEP_HOURS != 0 {
            return Err(IoError::Data(format!("lead time {lead} h is not a positive multiple of {LEAD_STEP_HOURS} h")));
        }
        pairs.push(TrainingPair { condition, target, lead_step: lead / LEAD_STEP_HOURS });
    }
    Ok((pairs, variables))
}

/// Fits the standardizer on the targets and encodes every pair.
pub fn encode_pairs(pairs: &[TrainingPair], variables: &[VariableId]) -> Result<(Vec<RefineSample>, Standardizer)> {
    let targets: Vec<FieldSet> = pairs.iter().map(|p| p.target.clone()).collect();
    let standardizer = Standardizer::fit(&targets, variables)?;
    let samples = pairs
        .iter()
        .map(|p| RefineSample::from_fieldsets(&p.condition, &p.target, p.lead_step, &standardizer))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((samples, standardizer))
}

/// Condition field sets from a pack holding plain variable names (or the
/// `cond:` arrays of a training pack).
pub fn conditions_from_pack(pack: &FieldPack) -> Result<Vec<FieldSet>> {
    if pack.variables.iter().any(|n| n.starts_with("cond:")) {
        pack.fieldsets_of(|n| n.strip_prefix("cond:").map(str::to_string))
    } else {
        pack.to_fieldsets()
    }
}

pub fn lead_time(valid: NaiveDateTime, lead_step: u32) -> PackTime {
    PackTime { valid_time: valid, lead_hours: lead_step * LEAD_STEP_HOURS }
}
