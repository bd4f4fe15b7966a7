//! Categorical and continuous verification scores.
//!
//! Events are `value >= threshold`. Tables from several initialisations are
//! pooled by adding counts before any score is taken.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::iter::Sum;
use core::ops::{Add, AddAssign};

use chrono::{Datelike, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::climatology::ClimatologyCube;
use crate::error::{Error, Result};
use crate::grid::{ensure_same_grid, Field, FieldSet, VariableId};

/// 6-hour precipitation thresholds (mm).
pub const TP_THRESHOLDS_MM: [f64; 5] = [2.5, 6.25, 25.0, 62.5, 70.0];
/// 10 m wind speed thresholds (m s⁻¹), Beaufort 7 to 12.
pub const WS10_THRESHOLDS_MS: [f64; 6] = [13.9, 17.2, 20.8, 24.5, 28.5, 32.7];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ContingencyTable {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        Self { tp, fp, fn_, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Hit rate `TP / (TP + FN)`.
    pub fn hit_rate(&self) -> Option<f64> {
        let d = self.tp + self.fn_;
        (d > 0).then(|| self.tp as f64 / d as f64)
    }

    /// False alarm rate `FP / (FP + TN)`.
    pub fn false_alarm_rate(&self) -> Option<f64> {
        let d = self.fp + self.tn;
        (d > 0).then(|| self.fp as f64 / d as f64)
    }

    pub fn scaled(&self, k: u64) -> Self {
        Self::new(self.tp * k, self.fp * k, self.fn_ * k, self.tn * k)
    }
}

impl Add for ContingencyTable {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.tp + o.tp, self.fp + o.fp, self.fn_ + o.fn_, self.tn + o.tn)
    }
}

impl AddAssign for ContingencyTable {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Sum for ContingencyTable {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Threshold<'a> {
    Scalar(f64),
    /// Pointwise thresholds; NaN points are excluded from the count.
    Field(&'a Field),
}

/// Counts hits, false alarms, misses and correct negatives.
///
/// `region`, when given, selects the points that are scored: points where it
/// is below 0.5 are skipped. NaN in either field or in a threshold field also
/// removes the point.
pub fn contingency(forecast: &Field, truth: &Field, threshold: Threshold<'_>, region: Option<&Field>) -> Result<ContingencyTable> {
    ensure_same_grid(forecast, truth)?;
    if let Threshold::Field(t) = threshold {
        ensure_same_grid(forecast, t)?;
    }
    if let Some(r) = region {
        ensure_same_grid(forecast, r)?;
    }
    let mut table = ContingencyTable::default();
    for i in 0..forecast.grid().len() {
        if let Some(r) = region {
            if !(r.values()[i] >= 0.5) {
                continue;
            }
        }
        let thr = match threshold {
            Threshold::Scalar(v) => v,
            Threshold::Field(t) => t.values()[i],
        };
        let (f, o) = (forecast.values()[i], truth.values()[i]);
        if thr.is_nan() || f.is_nan() || o.is_nan() {
            continue;
        }
        match (f >= thr, o >= thr) {
            (true, true) => table.tp += 1,
            (true, false) => table.fp += 1,
            (false, true) => table.fn_ += 1,
            (false, false) => table.tn += 1,
        }
    }
    if table.total() == 0 {
        return Err(Error::Empty { what: "set of scored (unmasked) points" });
    }
    Ok(table)
}

/// Critical success index `TP / (TP + FP + FN)`.
pub fn csi(t: &ContingencyTable) -> Option<f64> {
    let d = t.tp + t.fp + t.fn_;
    (d > 0).then(|| t.tp as f64 / d as f64)
}

/// How SEDI keeps hit and false-alarm rates away from 0 and 1.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub enum SediClamp {
    /// `eps = 1 / (2 N)` with `N` the table total.
    #[default]
    Auto,
    Fixed(f64),
    /// No clamping; degenerate rates give an absent score.
    Off,
}

/// Symmetric extremal dependence index for given hit rate `h` and false
/// alarm rate `f`, both strictly inside (0, 1).
pub fn sedi_from_rates(h: f64, f: f64) -> f64 {
    let (lf, lh) = (libm::log(f), libm::log(h));
    let (l1f, l1h) = (libm::log(1.0 - f), libm::log(1.0 - h));
    (lf - lh - l1f + l1h) / (lf + lh + l1f + l1h)
}

pub fn sedi(t: &ContingencyTable, clamp: SediClamp) -> Option<f64> {
    let h = t.hit_rate()?;
    let f = t.false_alarm_rate()?;
    let eps = match clamp {
        SediClamp::Auto => 1.0 / (2.0 * t.total() as f64),
        SediClamp::Fixed(e) => e,
        SediClamp::Off => 0.0,
    };
    let (h, f) = if eps > 0.0 { (h.clamp(eps, 1.0 - eps), f.clamp(eps, 1.0 - eps)) } else { (h, f) };
    let s = sedi_from_rates(h, f);
    s.is_finite().then_some(s)
}

fn cos_lat_weights(field: &Field) -> Vec<f64> {
    let g = field.grid();
    (0..g.nlat).map(|r| libm::cos(g.lat(r).to_radians()).max(0.0)).collect()
}

/// `sqrt(Σ w (f - t)² / Σ w)` with `w = cos(lat)`; NaN points are skipped.
pub fn latitude_weighted_rmse(forecast: &Field, truth: &Field) -> Result<f64> {
    ensure_same_grid(forecast, truth)?;
    let w = cos_lat_weights(forecast);
    let nlon = forecast.grid().nlon;
    let (mut num, mut den) = (0.0, 0.0);
    for (i, (f, t)) in forecast.values().iter().zip(truth.values()).enumerate() {
        let d = f - t;
        if d.is_nan() {
            continue;
        }
        let wi = w[i / nlon];
        num += wi * d * d;
        den += wi;
    }
    if den <= 0.0 {
        return Err(Error::Empty { what: "set of weighted points" });
    }
    Ok(libm::sqrt(num / den))
}

/// Cosine-latitude weighted Pearson correlation of the forecast and truth
/// anomalies about `climatology_mean`. `None` when either anomaly field has
/// zero weighted variance.
pub fn latitude_weighted_acc(forecast: &Field, truth: &Field, climatology_mean: &Field) -> Result<Option<f64>> {
    ensure_same_grid(forecast, truth)?;
    ensure_same_grid(forecast, climatology_mean)?;
    let w = cos_lat_weights(forecast);
    let nlon = forecast.grid().nlon;
    let mut pts = Vec::with_capacity(forecast.grid().len());
    for i in 0..forecast.grid().len() {
        let c = climatology_mean.values()[i];
        let (fa, ta) = (forecast.values()[i] - c, truth.values()[i] - c);
        if fa.is_nan() || ta.is_nan() {
            continue;
        }
        pts.push((w[i / nlon], fa, ta));
    }
    let sw: f64 = pts.iter().map(|p| p.0).sum();
    if sw <= 0.0 {
        return Err(Error::Empty { what: "set of weighted points" });
    }
    let mf = pts.iter().map(|p| p.0 * p.1).sum::<f64>() / sw;
    let mt = pts.iter().map(|p| p.0 * p.2).sum::<f64>() / sw;
    let (mut cov, mut vf, mut vt) = (0.0, 0.0, 0.0);
    for &(wi, fa, ta) in &pts {
        let (df, dt) = (fa - mf, ta - mt);
        cov += wi * df * dt;
        vf += wi * df * df;
        vt += wi * dt * dt;
    }
    if vf <= 0.0 || vt <= 0.0 {
        return Ok(None);
    }
    Ok(Some((cov / libm::sqrt(vf * vt)).clamp(-1.0, 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ThresholdSpec {
    /// Fixed physical threshold in the variable's units.
    Absolute(f64),
    /// Percentile of the reference climatology at each gridpoint.
    Percentile(f64),
}

impl ThresholdSpec {
    /// `"25"` for absolute thresholds, `"p98"` for climatological ones.
    pub fn label(&self) -> String {
        match self {
            ThresholdSpec::Absolute(v) => format!("{v}"),
            ThresholdSpec::Percentile(p) => format!("p{p}"),
        }
    }

    pub fn defaults_for(variable: VariableId) -> Vec<ThresholdSpec> {
        use crate::grid::VarName;
        match variable.name {
            VarName::TP => TP_THRESHOLDS_MM.iter().map(|&v| ThresholdSpec::Absolute(v)).collect(),
            VarName::WS10 => WS10_THRESHOLDS_MS.iter().map(|&v| ThresholdSpec::Absolute(v)).collect(),
            _ => crate::climatology::DEFAULT_PERCENTILES.iter().map(|&p| ThresholdSpec::Percentile(p)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub lead_hours: u32,
    pub variable: VariableId,
    pub threshold: String,
    pub table: ContingencyTable,
    pub csi: Option<f64>,
    pub sedi: Option<f64>,
}

/// Matches each forecast to the truth valid at the same time. Fails with the
/// list of valid times that have no truth.
pub fn align<'a>(forecasts: &'a [FieldSet], truths: &'a [FieldSet]) -> Result<Vec<(&'a FieldSet, &'a FieldSet)>> {
    let by_time: BTreeMap<NaiveDateTime, &FieldSet> = truths.iter().map(|t| (t.valid_time(), t)).collect();
    let mut missing = Vec::new();
    let mut pairs = Vec::with_capacity(forecasts.len());
    for f in forecasts {
        match by_time.get(&f.valid_time()) {
            Some(t) => pairs.push((f, *t)),
            None => missing.push(f.valid_time()),
        }
    }
    if !missing.is_empty() {
        missing.sort();
        missing.dedup();
        return Err(Error::Alignment { missing });
    }
    Ok(pairs)
}

/// Contingency table for one forecast/truth pair under one threshold spec.
pub fn case_table(
    forecast: &FieldSet,
    truth: &FieldSet,
    variable: VariableId,
    spec: ThresholdSpec,
    cube: Option<&ClimatologyCube>,
    region: Option<&Field>,
) -> Result<ContingencyTable> {
    let f = forecast.require(variable)?;
    let o = truth.require(variable)?;
    match spec {
        ThresholdSpec::Absolute(v) => contingency(f, o, Threshold::Scalar(v), region),
        ThresholdSpec::Percentile(p) => {
            let cube = cube.ok_or_else(|| Error::InvalidArgument("percentile thresholds need a climatology cube".into()))?;
            let t = truth.valid_time();
            let thr = cube.threshold_field(t.month(), t.hour(), p)?;
            contingency(f, o, Threshold::Field(&thr), region)
        }
    }
}

/// Pools contingency tables per lead time over all initialisations and
/// scores them; one row per (lead time, threshold), sorted by lead time.
pub fn score_series(
    forecasts: &[FieldSet],
    truths: &[FieldSet],
    variable: VariableId,
    specs: &[ThresholdSpec],
    cube: Option<&ClimatologyCube>,
) -> Result<Vec<ScoreRow>> {
    let pairs = align(forecasts, truths)?;
    let mut rows = Vec::new();
    for &spec in specs {
        let mut pooled: BTreeMap<u32, ContingencyTable> = BTreeMap::new();
        for (f, t) in &pairs {
            *pooled.entry(f.lead_hours()).or_default() += case_table(f, t, variable, spec, cube, None)?;
        }
        rows.extend(pooled.into_iter().map(|(lead, table)| ScoreRow {
            lead_hours: lead,
            variable,
            threshold: spec.label(),
            table,
            csi: csi(&table),
            sedi: sedi(&table, SediClamp::Auto),
        }));
    }
    rows.sort_by_key(|r| r.lead_hours);
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContinuousMetric {
    Rmse,
    Acc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousRow {
    pub lead_hours: u32,
    pub variable: VariableId,
    pub cases: usize,
    /// Mean of the per-case scores; `None` if every case was undefined.
    pub value: Option<f64>,
}

/// Per-lead mean of latitude-weighted RMSE or ACC over initialisations.
/// ACC takes its climatological mean from `cube`.
pub fn continuous_series(
    forecasts: &[FieldSet],
    truths: &[FieldSet],
    variable: VariableId,
    metric: ContinuousMetric,
    cube: Option<&ClimatologyCube>,
) -> Result<Vec<ContinuousRow>> {
    let pairs = align(forecasts, truths)?;
    let mut per_lead: BTreeMap<u32, (usize, Vec<f64>)> = BTreeMap::new();
    for (f, t) in &pairs {
        let ff = f.require(variable)?;
        let tf = t.require(variable)?;
        let score = match metric {
            ContinuousMetric::Rmse => Some(latitude_weighted_rmse(ff, tf)?),
            ContinuousMetric::Acc => {
                let cube = cube.ok_or_else(|| Error::InvalidArgument("ACC needs a climatology cube for the mean".into()))?;
                let vt = t.valid_time();
                latitude_weighted_acc(ff, tf, &cube.mean_field(vt.month(), vt.hour())?)?
            }
        };
        let slot = per_lead.entry(f.lead_hours()).or_default();
        slot.0 += 1;
        slot.1.extend(score);
    }
    Ok(per_lead
        .into_iter()
        .map(|(lead, (cases, mut vals))| {
            vals.sort_by(f64::total_cmp);
            let value = (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
            ContinuousRow { lead_hours: lead, variable, cases, value }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridSpec, VarName};
    use alloc::vec;

    fn grid() -> GridSpec {
        GridSpec::new(4, 4, 30.0, 10.0, 0.0, 10.0).unwrap()
    }

    fn field(vals: Vec<f64>) -> Field {
        Field::new(grid(), VariableId::surface(VarName::TP), "mm", vals).unwrap()
    }

    #[test]
    fn perfect_forecast_has_no_errors() {
        let f = field((0..16).map(|i| i as f64).collect());
        let t = contingency(&f, &f, Threshold::Scalar(7.0), None).unwrap();
        assert_eq!((t.fp, t.fn_), (0, 0));
        assert_eq!(t.tp, 9);
        assert_eq!(csi(&t), Some(1.0));
    }

    #[test]
    fn all_misses() {
        let f = field(vec![0.0; 16]);
        let o = field(vec![10.0; 16]);
        assert_eq!(contingency(&f, &o, Threshold::Scalar(5.0), None).unwrap(), ContingencyTable::new(0, 0, 16, 0));
    }

    #[test]
    fn threshold_is_inclusive() {
        let f = field(vec![5.0; 16]);
        let t = contingency(&f, &f, Threshold::Scalar(5.0), None).unwrap();
        assert_eq!(t.tp, 16);
    }

    #[test]
    fn region_and_masks() {
        let f = field(vec![1.0; 16]);
        let mut r = vec![0.0; 16];
        r[3] = 1.0;
        r[4] = 0.7;
        let region = Field::new(grid(), VariableId::surface(VarName::LSM), "1", r).unwrap();
        assert_eq!(contingency(&f, &f, Threshold::Scalar(0.5), Some(&region)).unwrap().total(), 2);
        let none = Field::new(grid(), VariableId::surface(VarName::LSM), "1", vec![0.0; 16]).unwrap();
        assert!(matches!(contingency(&f, &f, Threshold::Scalar(0.5), Some(&none)), Err(Error::Empty { .. })));
        let mut thr = vec![0.5; 16];
        thr[0] = f64::NAN;
        let thr = Field::new_masked(grid(), VariableId::surface(VarName::TP), "mm", thr).unwrap();
        assert_eq!(contingency(&f, &f, Threshold::Field(&thr), None).unwrap().total(), 15);
    }

    #[test]
    fn csi_examples() {
        assert_eq!(csi(&ContingencyTable::new(3, 1, 2, 10)), Some(0.5));
        assert_eq!(csi(&ContingencyTable::new(4, 0, 0, 1)), Some(1.0));
        assert_eq!(csi(&ContingencyTable::new(0, 0, 0, 7)), None);
    }

    #[test]
    fn sedi_examples() {
        // H = F = 0.25
        let t = ContingencyTable::new(1, 1, 3, 3);
        assert!(sedi(&t, SediClamp::Auto).unwrap().abs() < 1e-15);
        assert!((sedi_from_rates(0.8, 0.1) - 0.845_064_5).abs() < 1e-6);
        // perfect table at N = 10^4
        let perfect = ContingencyTable::new(100, 0, 0, 9900);
        assert!(sedi(&perfect, SediClamp::Auto).unwrap() > 0.99);
        assert_eq!(sedi(&perfect, SediClamp::Off), None);
        // no observed events: hit rate undefined
        assert_eq!(sedi(&ContingencyTable::new(0, 2, 0, 5), SediClamp::Auto), None);
    }

    #[test]
    fn rmse_of_constant_offset() {
        let g = GridSpec::new(5, 6, 60.0, 30.0, 0.0, 60.0).unwrap();
        let id = VariableId::surface(VarName::T2M);
        let t = Field::from_fn(g, id, "K", |r, c, _| (r * 7 + c) as f64).unwrap();
        let f = t.map(|v| v + 2.5).unwrap();
        assert!((latitude_weighted_rmse(&f, &t).unwrap() - 2.5).abs() < 1e-12);
        assert_eq!(latitude_weighted_rmse(&t, &t).unwrap(), 0.0);
    }

    #[test]
    fn acc_limits() {
        let g = GridSpec::new(5, 6, 60.0, 30.0, 0.0, 60.0).unwrap();
        let id = VariableId::surface(VarName::T2M);
        let clim = Field::filled(g, id, "K", 280.0).unwrap();
        let t = Field::from_fn(g, id, "K", |r, c, _| 280.0 + ((r * 7 + c * 3) % 5) as f64).unwrap();
        assert!((latitude_weighted_acc(&t, &t, &clim).unwrap().unwrap() - 1.0).abs() < 1e-12);
        let neg = t.map(|v| 560.0 - v).unwrap();
        assert!((latitude_weighted_acc(&neg, &t, &clim).unwrap().unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(latitude_weighted_acc(&clim, &t, &clim).unwrap(), None);
    }
}
