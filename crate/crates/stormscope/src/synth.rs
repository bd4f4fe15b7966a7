//! Synthetic cases with known answers: advected vortices with a truth
//! sidecar, and smooth/sharp field pairs for the refiner.

use chrono::NaiveDateTime;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use stormscope_core::ddpm::{RefineSample, Stack};
use stormscope_core::synth::{advect_sequence, degrade_values, gaussian_random_values, VortexSpec};
use stormscope_core::{Field, FieldSet, GridSpec, LatLon};

use crate::ddpm_io::{TrainingPair, LEAD_STEP_HOURS};
use crate::error::Result;
use crate::fpk::FieldPack;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VortexTruth {
    pub spec: VortexSpec,
    pub grid: GridSpec,
    pub init_time: NaiveDateTime,
    pub dt_hours: u32,
    pub steps_requested: usize,
    pub truncated: bool,
    pub centers: Vec<LatLon>,
}

pub fn vortex_case(grid: &GridSpec, spec: &VortexSpec, steps: usize, dt_hours: u32, init_time: NaiveDateTime) -> Result<(FieldPack, VortexTruth)> {
    let seq = advect_sequence(grid, spec, steps, dt_hours, init_time)?;
    let mut pack = FieldPack::from_fieldsets(&seq.fields)?;
    pack.attrs.insert("kind".into(), "synthetic_vortex".into());
    let truth = VortexTruth {
        spec: *spec,
        grid: *grid,
        init_time,
        dt_hours,
        steps_requested: steps,
        truncated: seq.truncated,
        centers: seq.centers,
    };
    Ok((pack, truth))
}

/// Smooth/sharp pairs on a small periodic grid. The truth mixes a broad and
/// a fine random component of unit variance; the condition is the truth
/// blurred by `blur_per_step * k` cells at lead step `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyRefineSpec {
    pub rows: usize,
    pub cols: usize,
    /// Correlation lengths of the two truth components, in cells.
    pub coarse_cells: f64,
    pub fine_cells: f64,
    pub max_lead_step: u32,
    pub blur_per_step: f64,
}

impl Default for ToyRefineSpec {
    fn default() -> Self {
        Self { rows: 32, cols: 32, coarse_cells: 4.0, fine_cells: 1.0, max_lead_step: 4, blur_per_step: 0.5 }
    }
}

impl ToyRefineSpec {
    pub fn truth(&self, rng: &mut impl Rng) -> Result<Vec<f64>> {
        let a = gaussian_random_values(self.rows, self.cols, self.coarse_cells, self.coarse_cells, rng)?;
        let b = gaussian_random_values(self.rows, self.cols, self.fine_cells, self.fine_cells, rng)?;
        Ok(a.iter().zip(&b).map(|(x, y)| (x + y) / std::f64::consts::SQRT_2).collect())
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Result<RefineSample> {
        let truth = self.truth(rng)?;
        let k = rng.gen_range(1..=self.max_lead_step);
        let cond = degrade_values(&truth, self.rows, self.cols, self.blur_per_step * k as f64)?;
        Ok(RefineSample::new(Stack::new(1, self.rows, self.cols, cond)?, Stack::new(1, self.rows, self.cols, truth)?, k)?)
    }

    /// `n` samples from one seeded stream.
    pub fn samples(&self, n: usize, seed: u64) -> Result<Vec<RefineSample>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.sample(&mut rng)).collect()
    }

    /// A 1-degree grid with the toy's shape, for writing packs.
    pub fn grid(&self) -> Result<GridSpec> {
        Ok(GridSpec::new(self.rows, self.cols, (self.rows as f64 - 1.0) / 2.0, 1.0, 0.0, 1.0)?)
    }

    /// The samples as 2 m temperature pairs, valid 6-hourly from `start`.
    pub fn training_pairs(&self, samples: &[RefineSample], start: NaiveDateTime) -> Result<Vec<TrainingPair>> {
        let grid = self.grid()?;
        let var = "T2M".parse()?;
        samples
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let valid = start + chrono::Duration::hours(6 * i as i64);
                let lead = s.lead_step * LEAD_STEP_HOURS;
                let fs = |v: &[f64]| -> Result<FieldSet> { Ok(FieldSet::with_fields(valid, lead, [Field::new(grid, var, "1", v.to_vec())?])?) };
                Ok(TrainingPair { condition: fs(&s.condition.data)?, target: fs(&s.target.data)?, lead_step: s.lead_step })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_samples_are_seeded() {
        let spec = ToyRefineSpec { rows: 8, cols: 8, ..Default::default() };
        assert_eq!(spec.samples(3, 5).unwrap(), spec.samples(3, 5).unwrap());
        assert_ne!(spec.samples(3, 5).unwrap(), spec.samples(3, 6).unwrap());
    }
}
