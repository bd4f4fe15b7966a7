//! Percentile climatology per calendar month, hour of day and gridpoint.
//!
//! Every (month, hour) cell pools all years of the reference history. The
//! percentile estimator interpolates linearly between order statistics at
//! rank `h = (n - 1) p / 100 + 1`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use chrono::{Datelike, Timelike};

use crate::error::{Error, Result};
use crate::grid::{check_six_hourly, Field, FieldSet, GridSpec, VariableId};

pub const DEFAULT_PERCENTILES: [f64; 4] = [90.0, 95.0, 98.0, 99.5];

/// Hours of day the cube is resolved at.
pub const HOURS: [u32; 4] = [0, 6, 12, 18];

const MONTHS: usize = 12;

/// Linear interpolation between the order statistics of an ascending slice.
pub fn percentile_of_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    debug_assert!(n > 0);
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p / 100.0; // zero-based rank
    let lo = libm::floor(h) as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    let frac = h - lo as f64;
    let (a, b) = (sorted[lo], sorted[lo + 1]);
    (a + frac * (b - a)).min(b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClimatologyCube {
    variable: VariableId,
    grid: GridSpec,
    percentiles: Vec<f64>,
    /// `[month][hour][percentile][gridpoint]`, NaN where no samples exist.
    thresholds: Vec<f64>,
    /// `[month][hour][gridpoint]`, NaN where no samples exist.
    mean: Vec<f64>,
    /// `[month][hour][gridpoint]`
    counts: Vec<u32>,
}

fn hour_slot(hour: u32) -> Result<usize> {
    HOURS
        .iter()
        .position(|&h| h == hour)
        .ok_or_else(|| Error::OutOfRange { what: "hour of day", detail: format!("{hour} is not one of {HOURS:?}") })
}

fn month_slot(month: u32) -> Result<usize> {
    if (1..=12).contains(&month) {
        Ok(month as usize - 1)
    } else {
        Err(Error::OutOfRange { what: "month", detail: format!("{month} is not in 1..=12") })
    }
}

fn validate_percentiles(percentiles: &[f64]) -> Result<()> {
    if percentiles.is_empty() {
        return Err(Error::Empty { what: "percentile list" });
    }
    for w in percentiles.windows(2) {
        if !(w[0] < w[1]) {
            return Err(Error::InvalidArgument(format!("percentiles must be strictly increasing: {percentiles:?}")));
        }
    }
    if percentiles.iter().any(|p| !(0.0..=100.0).contains(p)) {
        return Err(Error::InvalidArgument(format!("percentiles must lie in [0, 100]: {percentiles:?}")));
    }
    Ok(())
}

/// Builds the cube for `variable` from a reference history.
///
/// The result does not depend on the order of `history`: samples are sorted
/// per cell before both the percentiles and the mean are taken.
pub fn build_climatology(history: &[FieldSet], variable: VariableId, percentiles: &[f64]) -> Result<ClimatologyCube> {
    if history.is_empty() {
        return Err(Error::Empty { what: "climatology history" });
    }
    validate_percentiles(percentiles)?;
    let mut grid: Option<GridSpec> = None;
    // (cell, field) pairs, cell = month * 4 + hour slot
    let mut members: Vec<Vec<&Field>> = vec![Vec::new(); MONTHS * HOURS.len()];
    for fs in history {
        let t = fs.valid_time();
        check_six_hourly(t)?;
        let field = fs.require(variable)?;
        match grid {
            None => grid = Some(*field.grid()),
            Some(g) if g != *field.grid() => {
                return Err(Error::GridMismatch(format!("history member at {t} is on a different grid")));
            }
            Some(_) => {}
        }
        let cell = month_slot(t.month())? * HOURS.len() + hour_slot(t.hour())?;
        members[cell].push(field);
    }
    let grid = grid.expect("history is non-empty");
    let npts = grid.len();
    let np = percentiles.len();
    let ncell = MONTHS * HOURS.len();
    let mut thresholds = vec![f64::NAN; ncell * np * npts];
    let mut mean = vec![f64::NAN; ncell * npts];
    let mut counts = vec![0u32; ncell * npts];
    let mut samples = Vec::new();
    for (cell, fields) in members.iter().enumerate() {
        if fields.is_empty() {
            continue;
        }
        for gp in 0..npts {
            samples.clear();
            samples.extend(fields.iter().map(|f| f.values()[gp]).filter(|v| !v.is_nan()));
            if samples.is_empty() {
                continue;
            }
            samples.sort_by(f64::total_cmp);
            counts[cell * npts + gp] = samples.len() as u32;
            mean[cell * npts + gp] = samples.iter().sum::<f64>() / samples.len() as f64;
            for (pi, &p) in percentiles.iter().enumerate() {
                thresholds[(cell * np + pi) * npts + gp] = percentile_of_sorted(&samples, p);
            }
        }
    }
    Ok(ClimatologyCube { variable, grid, percentiles: percentiles.to_vec(), thresholds, mean, counts })
}

impl ClimatologyCube {
    /// Reassembles a cube from its raw arrays (e.g. after deserialisation).
    pub fn from_parts(
        variable: VariableId,
        grid: GridSpec,
        percentiles: Vec<f64>,
        thresholds: Vec<f64>,
        mean: Vec<f64>,
        counts: Vec<u32>,
    ) -> Result<Self> {
        validate_percentiles(&percentiles)?;
        let cells = MONTHS * HOURS.len() * grid.len();
        if thresholds.len() != cells * percentiles.len() || mean.len() != cells || counts.len() != cells {
            return Err(Error::Shape(format!("cube arrays do not match {} cells x {} percentiles", cells, percentiles.len())));
        }
        Ok(Self { variable, grid, percentiles, thresholds, mean, counts })
    }

    pub fn variable(&self) -> VariableId {
        self.variable
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn percentiles(&self) -> &[f64] {
        &self.percentiles
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn means(&self) -> &[f64] {
        &self.mean
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    fn percentile_slot(&self, percentile: f64) -> Result<usize> {
        self.percentiles
            .iter()
            .position(|&p| libm::fabs(p - percentile) < 1e-9)
            .ok_or_else(|| Error::UnknownPercentile { requested: percentile, available: self.percentiles.clone() })
    }

    fn cell(&self, month: u32, hour: u32) -> Result<usize> {
        Ok(month_slot(month)? * HOURS.len() + hour_slot(hour)?)
    }

    /// Threshold at one gridpoint, `None` where the cell had no samples.
    pub fn threshold_at(&self, month: u32, hour: u32, percentile: f64, gridpoint: usize) -> Result<Option<f64>> {
        let np = self.percentiles.len();
        let idx = (self.cell(month, hour)? * np + self.percentile_slot(percentile)?) * self.grid.len() + gridpoint;
        let v = self.thresholds[idx];
        Ok((!v.is_nan()).then_some(v))
    }

    pub fn sample_count(&self, month: u32, hour: u32, gridpoint: usize) -> Result<u32> {
        Ok(self.counts[self.cell(month, hour)? * self.grid.len() + gridpoint])
    }

    /// Per-gridpoint threshold slice; cells without samples are masked.
    pub fn threshold_field(&self, month: u32, hour: u32, percentile: f64) -> Result<Field> {
        let cell = self.cell(month, hour)?;
        let pi = self.percentile_slot(percentile)?;
        let n = self.grid.len();
        let start = (cell * self.percentiles.len() + pi) * n;
        Field::new_masked(self.grid, self.variable, "", self.thresholds[start..start + n].to_vec())
    }

    /// Climatological mean slice; cells without samples are masked.
    pub fn mean_field(&self, month: u32, hour: u32) -> Result<Field> {
        let n = self.grid.len();
        let start = self.cell(month, hour)? * n;
        Field::new_masked(self.grid, self.variable, "", self.mean[start..start + n].to_vec())
    }
}

/// Equivalent of [`threshold_field`](ClimatologyCube::threshold_field).
pub fn threshold_field(cube: &ClimatologyCube, month: u32, hour: u32, percentile: f64) -> Result<Field> {
    cube.threshold_field(month, hour, percentile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::VarName;
    use chrono::NaiveDate;

    fn grid() -> GridSpec {
        GridSpec::new(3, 4, 10.0, 1.0, 0.0, 1.0).unwrap()
    }

    fn t2m() -> VariableId {
        VariableId::surface(VarName::T2M)
    }

    fn member(year: i32, month: u32, hour: u32, value: f64) -> FieldSet {
        let t = NaiveDate::from_ymd_opt(year, month, 15).unwrap().and_hms_opt(hour, 0, 0).unwrap();
        FieldSet::with_fields(t, 0, [Field::filled(grid(), t2m(), "K", value).unwrap()]).unwrap()
    }

    #[test]
    fn constant_samples_give_constant_cube() {
        let history: Vec<_> = (0..5).map(|y| member(2000 + y, 7, 12, 3.5)).collect();
        let cube = build_climatology(&history, t2m(), &DEFAULT_PERCENTILES).unwrap();
        for p in DEFAULT_PERCENTILES {
            let f = cube.threshold_field(7, 12, p).unwrap();
            assert!(f.values().iter().all(|&v| v == 3.5));
        }
        assert!(cube.mean_field(7, 12).unwrap().values().iter().all(|&v| v == 3.5));
        // other cells have no samples
        assert!(cube.threshold_field(1, 0, 90.0).unwrap().values().iter().all(|v| v.is_nan()));
        assert_eq!(cube.sample_count(7, 12, 0).unwrap(), 5);
    }

    #[test]
    fn one_to_ten_gives_9_1_at_p90() {
        let history: Vec<_> = (1..=10).map(|i| member(1990 + i, 3, 6, i as f64)).collect();
        let cube = build_climatology(&history, t2m(), &[90.0]).unwrap();
        let f = threshold_field(&cube, 3, 6, 90.0).unwrap();
        for &v in f.values() {
            assert!((v - 9.1).abs() < 1e-12, "{v}");
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(build_climatology(&[], t2m(), &[90.0]), Err(Error::Empty { .. })));
        let history = [member(2000, 1, 0, 1.0)];
        let cube = build_climatology(&history, t2m(), &[90.0, 95.0]).unwrap();
        assert!(matches!(cube.threshold_field(13, 0, 90.0), Err(Error::OutOfRange { .. })));
        assert!(matches!(cube.threshold_field(0, 0, 90.0), Err(Error::OutOfRange { .. })));
        assert!(matches!(cube.threshold_field(1, 3, 90.0), Err(Error::OutOfRange { .. })));
        match cube.threshold_field(1, 0, 99.0) {
            Err(Error::UnknownPercentile { available, .. }) => assert_eq!(available, vec![90.0, 95.0]),
            other => panic!("{other:?}"),
        }
        let mixed_grid = {
            let g = GridSpec::new(2, 2, 0.0, 1.0, 0.0, 1.0).unwrap();
            let t = NaiveDate::from_ymd_opt(2001, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
            FieldSet::with_fields(t, 0, [Field::filled(g, t2m(), "K", 0.0).unwrap()]).unwrap()
        };
        assert!(matches!(build_climatology(&[history[0].clone(), mixed_grid], t2m(), &[90.0]), Err(Error::GridMismatch(_))));
        assert!(build_climatology(&history, t2m(), &[95.0, 90.0]).is_err());
    }
}
