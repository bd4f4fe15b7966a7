use alloc::format;
use alloc::vec::Vec;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, FieldSet, GridSpec, VarName, VariableId};

/// Channel-major stack of equally sized planes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stack {
    pub channels: usize,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Stack {
    pub fn new(channels: usize, rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if channels == 0 || rows == 0 || cols == 0 {
            return Err(Error::Shape(format!("empty stack {channels}x{rows}x{cols}")));
        }
        if data.len() != channels * rows * cols {
            return Err(Error::Shape(format!("{} values for a {channels}x{rows}x{cols} stack", data.len())));
        }
        Ok(Self { channels, rows, cols, data })
    }

    pub fn zeros(channels: usize, rows: usize, cols: usize) -> Self {
        Self { channels, rows, cols, data: alloc::vec![0.0; channels * rows * cols] }
    }

    pub fn plane_len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn plane(&self, channel: usize) -> &[f64] {
        let n = self.plane_len();
        &self.data[channel * n..(channel + 1) * n]
    }

    pub fn same_shape(&self, other: &Stack) -> bool {
        (self.channels, self.rows, self.cols) == (other.channels, other.rows, other.cols)
    }

    pub fn same_plane(&self, other: &Stack) -> bool {
        (self.rows, self.cols) == (other.rows, other.cols)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariableStats {
    pub variable: VariableId,
    pub mean: f64,
    pub scale: f64,
    /// Values pass through `ln(1 + max(x, 0))` before standardising.
    pub log1p: bool,
}

impl VariableStats {
    fn transform(&self, x: f64) -> f64 {
        let y = if self.log1p { libm::log1p(x.max(0.0)) } else { x };
        (y - self.mean) / self.scale
    }

    fn inverse(&self, z: f64) -> f64 {
        let y = z * self.scale + self.mean;
        if self.log1p {
            libm::expm1(y).max(0.0)
        } else {
            y
        }
    }
}

/// Per-variable standardisation to zero mean and unit variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub stats: Vec<VariableStats>,
}

impl Standardizer {
    /// Statistics over every gridpoint of every member. Precipitation is
    /// log-transformed first.
    pub fn fit(members: &[FieldSet], variables: &[VariableId]) -> Result<Self> {
        if members.is_empty() || variables.is_empty() {
            return Err(Error::Empty { what: "standardisation sample" });
        }
        let mut stats = Vec::with_capacity(variables.len());
        for &var in variables {
            let log1p = var.name == VarName::TP;
            let proto = VariableStats { variable: var, mean: 0.0, scale: 1.0, log1p };
            let (mut sum, mut sq, mut n) = (0.0, 0.0, 0usize);
            for fs in members {
                for &v in fs.require(var)?.values() {
                    if v.is_nan() {
                        continue;
                    }
                    let y = proto.transform(v);
                    sum += y;
                    sq += y * y;
                    n += 1;
                }
            }
            if n == 0 {
                return Err(Error::Empty { what: "standardisation sample" });
            }
            let mean = sum / n as f64;
            let var_ = (sq / n as f64 - mean * mean).max(0.0);
            let sd = libm::sqrt(var_);
            stats.push(VariableStats { scale: if sd > 1e-12 { sd } else { 1.0 }, mean, ..proto });
        }
        Ok(Self { stats })
    }

    pub fn identity(variables: &[VariableId]) -> Self {
        Self { stats: variables.iter().map(|&v| VariableStats { variable: v, mean: 0.0, scale: 1.0, log1p: false }).collect() }
    }

    pub fn variables(&self) -> Vec<VariableId> {
        self.stats.iter().map(|s| s.variable).collect()
    }

    /// Standardised stack of this standardizer's variables, in order.
    pub fn encode(&self, fs: &FieldSet) -> Result<Stack> {
        let grid = fs.grid().ok_or(Error::Empty { what: "field set" })?;
        let mut data = Vec::with_capacity(self.stats.len() * grid.len());
        for s in &self.stats {
            let f = fs.require(s.variable)?;
            if let Some(i) = f.values().iter().position(|v| v.is_nan()) {
                return Err(Error::InvalidField { variable: s.variable, reason: format!("missing value at index {i}") });
            }
            data.extend(f.values().iter().map(|&v| s.transform(v)));
        }
        Stack::new(self.stats.len(), grid.nlat, grid.nlon, data)
    }

    /// Inverse of [`encode`](Self::encode). Precipitation is clamped at 0.
    pub fn decode(&self, stack: &Stack, grid: GridSpec, valid_time: NaiveDateTime, lead_hours: u32) -> Result<FieldSet> {
        if stack.channels != self.stats.len() || stack.rows != grid.nlat || stack.cols != grid.nlon {
            return Err(Error::Shape(format!(
                "stack {}x{}x{} does not match {} variables on a {}x{} grid",
                stack.channels, stack.rows, stack.cols, self.stats.len(), grid.nlat, grid.nlon
            )));
        }
        let mut fs = FieldSet::new(valid_time, lead_hours)?;
        for (c, s) in self.stats.iter().enumerate() {
            let values = stack.plane(c).iter().map(|&z| s.inverse(z)).collect();
            fs.insert(Field::new(grid, s.variable, "", values)?)?;
        }
        Ok(fs)
    }
}

/// One training pair: smooth forecast `condition`, truth `target`, both
/// standardised, and the forecast lead step `k` (6-hour steps).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineSample {
    pub condition: Stack,
    pub target: Stack,
    pub lead_step: u32,
}

impl RefineSample {
    pub fn new(condition: Stack, target: Stack, lead_step: u32) -> Result<Self> {
        if !condition.same_plane(&target) {
            return Err(Error::Shape("condition and target planes differ".into()));
        }
        if lead_step == 0 {
            return Err(Error::InvalidArgument("lead step must be at least 1".into()));
        }
        Ok(Self { condition, target, lead_step })
    }

    pub fn from_fieldsets(condition: &FieldSet, target: &FieldSet, lead_step: u32, standardizer: &Standardizer) -> Result<Self> {
        if condition.grid() != target.grid() {
            return Err(Error::GridMismatch("condition and target are on different grids".into()));
        }
        Self::new(standardizer.encode(condition)?, standardizer.encode(target)?, lead_step)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    #[test]
    fn round_trip_with_precipitation() {
        let g = GridSpec::new(2, 3, 10.0, 1.0, 0.0, 1.0).unwrap();
        let t = NaiveDate::from_ymd_opt(2018, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        let tp = VariableId::surface(VarName::TP);
        let t2m = VariableId::surface(VarName::T2M);
        let fs = FieldSet::with_fields(
            t,
            6,
            [
                Field::new(g, tp, "mm", alloc::vec![0.0, 0.5, 3.0, 10.0, 0.0, 1.0]).unwrap(),
                Field::new(g, t2m, "K", alloc::vec![280.0, 281.0, 282.0, 283.0, 284.0, 285.0]).unwrap(),
            ],
        )
        .unwrap();
        let s = Standardizer::fit(core::slice::from_ref(&fs), &[t2m, tp]).unwrap();
        let z = s.encode(&fs).unwrap();
        let mean: f64 = z.plane(0).iter().sum::<f64>() / 6.0;
        assert!(mean.abs() < 1e-12);
        let back = s.decode(&z, g, t, 6).unwrap();
        for var in [t2m, tp] {
            for (a, b) in back.require(var).unwrap().values().iter().zip(fs.require(var).unwrap().values()) {
                assert!((a - b).abs() < 1e-9);
            }
        }
        let mut negative = z.clone();
        negative.data[6..].iter_mut().for_each(|v| *v = -50.0);
        assert!(s.decode(&negative, g, t, 6).unwrap().require(tp).unwrap().values().iter().all(|&v| v == 0.0));
    }
}
