//! Tropical-cyclone tracker in the style of the ECMWF operational tracker.
//!
//! Starting from an observed position, the analysis MSL minimum within the
//! search radius is the first fix. Each later step extrapolates the next
//! position as the mean of the last displacement and a deep-layer steering
//! displacement, collects the strict MSL minima within the search radius of
//! that estimate, and keeps the closest one that passes the candidate checks.
//! Tracking stops when no candidate passes or the storm reaches high terrain.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{disk_indices, ensure_same_grid, great_circle_km, lon_delta, normalize_lon, vorticity_at, Field, FieldSet, GridSpec, LatLon, VarName, VariableId};
use crate::track::{TCPoint, TCTrack, Termination};

const DEG: f64 = core::f64::consts::PI / 180.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackerConfig {
    pub search_radius_km: f64,
    pub condition_radius_km: f64,
    /// Radius for the reported near-centre maximum wind.
    pub vicinity_radius_km: f64,
    pub ws10_threshold: f64,
    pub vorticity_threshold: f64,
    pub terrain_limit_m: f64,
    /// Land-sea mask value at or above which a gridpoint counts as land.
    pub land_fraction: f64,
    pub steering_levels: Vec<u16>,
    pub dt_hours: u32,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            search_radius_km: 445.0,
            condition_radius_km: 278.0,
            vicinity_radius_km: 278.0,
            ws10_threshold: 8.0,
            vorticity_threshold: 5e-5,
            terrain_limit_m: 1000.0,
            land_fraction: 0.5,
            steering_levels: alloc::vec![200, 500, 700, 850],
            dt_hours: 6,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.search_radius_km,
            self.condition_radius_km,
            self.vicinity_radius_km,
            self.ws10_threshold,
            self.vorticity_threshold,
            self.terrain_limit_m,
        ];
        if positive.iter().any(|v| !(*v > 0.0)) || self.dt_hours == 0 || self.steering_levels.is_empty() {
            return Err(Error::InvalidArgument("tracker radii, thresholds, levels and time step must be positive".into()));
        }
        for &l in &self.steering_levels {
            VariableId::upper(VarName::U, l)?;
        }
        Ok(())
    }
}

/// Orography and land-sea mask on the forecast grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticFields {
    orography: Field,
    land_sea_mask: Field,
}

impl StaticFields {
    pub fn new(orography: Field, land_sea_mask: Field) -> Result<Self> {
        ensure_same_grid(&orography, &land_sea_mask)?;
        if let Some(v) = land_sea_mask.values().iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidField { variable: land_sea_mask.variable(), reason: format!("mask value {v} outside [0, 1]") });
        }
        if orography.is_masked() && orography.values().iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidField { variable: orography.variable(), reason: "orography has missing points".into() });
        }
        Ok(Self { orography, land_sea_mask })
    }

    /// Sea everywhere at zero height.
    pub fn ocean(grid: GridSpec) -> Result<Self> {
        Self::new(
            Field::filled(grid, VariableId::surface(VarName::OROG), "m", 0.0)?,
            Field::filled(grid, VariableId::surface(VarName::LSM), "1", 0.0)?,
        )
    }

    pub fn orography(&self) -> &Field {
        &self.orography
    }

    pub fn land_sea_mask(&self) -> &Field {
        &self.land_sea_mask
    }
}

/// Strict local minima of `field` among `region`: points lower than all
/// eight neighbours. Longitude wraps on global grids. Points on the first or
/// last row, and on the edge columns of regional grids, are never minima.
/// Sorted by value, then index.
pub fn find_local_minima(field: &Field, region: &[usize]) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> =
        region.iter().copied().filter(|&i| is_strict_extremum(field, i, |c, n| c < n)).map(|i| (i, field.values()[i])).collect();
    out.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    out
}

fn is_strict_extremum(field: &Field, index: usize, beats: impl Fn(f64, f64) -> bool) -> bool {
    let g = field.grid();
    let (row, col) = g.row_col(index);
    let c = field.values()[index];
    if c.is_nan() {
        return false;
    }
    for dr in -1isize..=1 {
        for dc in -1isize..=1 {
            if dr == 0 && dc == 0 {
                continue;
            }
            let (Some(r), Some(cc)) = (g.row_offset(row, dr), g.col_offset(col, dc)) else {
                return false;
            };
            if !beats(c, field.get(r, cc)) {
                return false;
            }
        }
    }
    true
}

fn msl_scale_to_hpa(field: &Field) -> f64 {
    match field.units() {
        u if u.eq_ignore_ascii_case("hpa") || u.eq_ignore_ascii_case("mb") => 1.0,
        u if u.eq_ignore_ascii_case("pa") => 0.01,
        _ => {
            // unlabelled: surface pressure in Pa is always above 2000
            let v = field.values().iter().copied().find(|v| !v.is_nan()).unwrap_or(0.0);
            if v > 2000.0 {
                0.01
            } else {
                1.0
            }
        }
    }
}

enum Surface10mWind<'a> {
    Speed(&'a Field),
    Components(&'a Field, &'a Field),
}

impl<'a> Surface10mWind<'a> {
    fn from_fields(fs: &'a FieldSet) -> Result<Self> {
        if let Some(ws) = fs.get(VariableId::surface(VarName::WS10)) {
            return Ok(Self::Speed(ws));
        }
        let u = fs.require(VariableId::surface(VarName::U10))?;
        let v = fs.require(VariableId::surface(VarName::V10))?;
        Ok(Self::Components(u, v))
    }

    fn at(&self, i: usize) -> f64 {
        match self {
            Self::Speed(f) => f.values()[i],
            Self::Components(u, v) => libm::hypot(u.values()[i], v.values()[i]),
        }
    }

    fn max_over(&self, indices: &[usize]) -> Option<f64> {
        indices.iter().map(|&i| self.at(i)).filter(|v| !v.is_nan()).reduce(f64::max)
    }
}

fn level(name: VarName, hpa: u16) -> VariableId {
    VariableId { name, level: Some(hpa) }
}

fn max_abs_vorticity(fs: &FieldSet, indices: &[usize]) -> Result<Option<f64>> {
    let u = fs.require(level(VarName::U, 850))?;
    let v = fs.require(level(VarName::V, 850))?;
    let g = u.grid();
    Ok(indices
        .iter()
        .map(|&i| {
            let (r, c) = g.row_col(i);
            libm::fabs(vorticity_at(u, v, r, c))
        })
        .filter(|x| !x.is_nan())
        .reduce(f64::max))
}

fn fix_at(fs: &FieldSet, index: usize, lead_hours: u32, estimate: Option<LatLon>, cfg: &TrackerConfig) -> Result<TCPoint> {
    let msl = fs.require(VariableId::surface(VarName::MSL))?;
    let g = msl.grid();
    let pos = g.point(index);
    let vicinity = disk_indices(g, pos, cfg.vicinity_radius_km);
    let wind = Surface10mWind::from_fields(fs)?;
    let vorticity = if fs.get(level(VarName::U, 850)).is_some() && fs.get(level(VarName::V, 850)).is_some() {
        max_abs_vorticity(fs, &vicinity)?
    } else {
        None
    };
    Ok(TCPoint {
        lead_hours,
        lat: pos.lat,
        lon: pos.lon,
        msl_center: msl.values()[index] * msl_scale_to_hpa(msl),
        max_ws10: wind.max_over(&vicinity).unwrap_or(f64::NAN),
        vorticity_850: vorticity,
        estimate,
    })
}

/// Lowest MSL gridpoint within the search radius of the observed position;
/// ties go to the first point in row-major order. `None` if no gridpoint
/// lies within the radius.
pub fn first_guess(analysis: &FieldSet, observed: LatLon, cfg: &TrackerConfig) -> Result<Option<TCPoint>> {
    let msl = analysis.require(VariableId::surface(VarName::MSL))?;
    let disk = disk_indices(msl.grid(), observed, cfg.search_radius_km);
    let best = disk
        .iter()
        .copied()
        .filter(|&i| !msl.values()[i].is_nan())
        .min_by(|&a, &b| msl.values()[a].total_cmp(&msl.values()[b]).then(a.cmp(&b)));
    match best {
        Some(i) => Ok(Some(fix_at(analysis, i, analysis.lead_hours(), None, cfg)?)),
        None => Ok(None),
    }
}

/// Mean wind over the steering levels at the nearest gridpoint, times the
/// time step, as an (east, north) displacement in km.
pub fn steering_vector_km(fields: &FieldSet, position: LatLon, cfg: &TrackerConfig) -> Result<(f64, f64)> {
    if libm::fabs(position.lat) >= 89.5 {
        return Err(Error::OutOfRange { what: "steering latitude", detail: format!("{} is within 0.5 degrees of a pole", position.lat) });
    }
    if cfg.steering_levels.is_empty() {
        return Err(Error::InvalidArgument("no steering levels configured".into()));
    }
    let (mut su, mut sv) = (0.0, 0.0);
    let mut index = None;
    for &lvl in &cfg.steering_levels {
        let u = fields.require(level(VarName::U, lvl))?;
        let v = fields.require(level(VarName::V, lvl))?;
        let (row, col) = *index.get_or_insert_with(|| u.grid().nearest(position));
        su += u.get(row, col);
        sv += v.get(row, col);
    }
    let n = cfg.steering_levels.len() as f64;
    let dt_s = cfg.dt_hours as f64 * 3600.0;
    Ok((su / n * dt_s / 1000.0, sv / n * dt_s / 1000.0))
}

/// Converts an (east, north) displacement in km into degrees at `at`.
fn km_to_degrees(at: LatLon, east_km: f64, north_km: f64, radius_km: f64) -> (f64, f64) {
    let dlat = north_km / radius_km / DEG;
    let dlon = east_km / (radius_km * libm::cos(at.lat * DEG)) / DEG;
    (dlat, dlon)
}

/// Steering displacement `(dlat, dlon)` in degrees on the local tangent plane.
pub fn steering_displacement(fields: &FieldSet, position: LatLon, cfg: &TrackerConfig) -> Result<(f64, f64)> {
    let (e, n) = steering_vector_km(fields, position, cfg)?;
    Ok(km_to_degrees(position, e, n, grid_radius(fields)))
}

fn grid_radius(fields: &FieldSet) -> f64 {
    fields.grid().map(|g| g.earth_radius_km).unwrap_or(crate::grid::EARTH_RADIUS_KM)
}

/// Next-position estimate: the mean of the last displacement (carried to the
/// current position on the tangent plane) and the steering displacement;
/// steering alone while the track has a single point.
pub fn estimate_next_position(track: &TCTrack, fields: &FieldSet, cfg: &TrackerConfig) -> Result<LatLon> {
    let current = track.points.last().ok_or(Error::Empty { what: "track" })?.position();
    let radius = grid_radius(fields);
    let (se, sn) = steering_vector_km(fields, current, cfg)?;
    let (east, north) = match track.points.len() {
        1 => (se, sn),
        n => {
            let prev = track.points[n - 2].position();
            let mid_lat = (prev.lat + current.lat) / 2.0;
            let ee = radius * libm::cos(mid_lat * DEG) * lon_delta(prev.lon, current.lon) * DEG;
            let en = radius * (current.lat - prev.lat) * DEG;
            ((ee + se) / 2.0, (en + sn) / 2.0)
        }
    };
    let (dlat, dlon) = km_to_degrees(current, east, north, radius);
    Ok(LatLon::new(current.lat + dlat, normalize_lon(current.lon + dlon)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Passed,
    Failed,
    /// Not required for this candidate.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateReport {
    pub index: usize,
    pub over_land: bool,
    /// Maximum 10 m wind within the condition radius.
    pub max_ws10: Option<f64>,
    pub wind: Check,
    /// Maximum |850 hPa vorticity| within the condition radius.
    pub max_abs_vorticity: Option<f64>,
    pub vorticity: Check,
    pub thickness: Check,
}

impl CandidateReport {
    pub fn is_valid(&self) -> bool {
        ![self.wind, self.vorticity, self.thickness].contains(&Check::Failed)
    }
}

/// Whether the wind condition applies at a candidate. Over land the near
/// centre wind has to exceed the threshold; over sea it is not checked.
fn wind_check_required(over_land: bool) -> bool {
    over_land
}

/// Evaluates the three candidate conditions at gridpoint `candidate`.
pub fn candidate_valid(
    candidate: usize,
    fields: &FieldSet,
    statics: Option<&StaticFields>,
    extratropical: bool,
    cfg: &TrackerConfig,
) -> Result<CandidateReport> {
    let msl = fields.require(VariableId::surface(VarName::MSL))?;
    let g = *msl.grid();
    if let Some(s) = statics {
        ensure_same_grid(msl, s.land_sea_mask())?;
    }
    let disk = disk_indices(&g, g.point(candidate), cfg.condition_radius_km);
    let over_land = statics.map(|s| s.land_sea_mask().values()[candidate] >= cfg.land_fraction).unwrap_or(false);

    let max_ws10 = Surface10mWind::from_fields(fields)?.max_over(&disk);
    let wind = if !wind_check_required(over_land) {
        Check::Skipped
    } else if max_ws10.is_some_and(|w| w > cfg.ws10_threshold) {
        Check::Passed
    } else {
        Check::Failed
    };

    let max_abs_vorticity = max_abs_vorticity(fields, &disk)?;
    let vorticity = if max_abs_vorticity.is_some_and(|z| z >= cfg.vorticity_threshold) { Check::Passed } else { Check::Failed };

    let thickness = if extratropical {
        let z200 = fields.require(level(VarName::Z, 200))?;
        let z850 = fields.require(level(VarName::Z, 850))?;
        let thk = crate::grid::thickness(z200, z850)?;
        if disk.iter().any(|&i| is_strict_extremum(&thk, i, |c, n| c > n)) {
            Check::Passed
        } else {
            Check::Failed
        }
    } else {
        Check::Skipped
    };

    Ok(CandidateReport { index: candidate, over_land, max_ws10, wind, max_abs_vorticity, vorticity, thickness })
}

/// Identifies the storm to track.
#[derive(Debug, Clone)]
pub struct TrackRequest<'a> {
    pub sid: &'a str,
    pub init_time: NaiveDateTime,
    /// Observed position at `init_time`.
    pub observed: LatLon,
    /// Valid times at which the storm is extratropical; the thickness
    /// condition only applies then.
    pub extratropical: Option<&'a BTreeSet<NaiveDateTime>>,
}

/// Tracks one storm through `forecast`, whose first member is the analysis
/// (lead 0) and whose members advance by the configured time step.
pub fn track_tc(forecast: &[FieldSet], request: &TrackRequest<'_>, statics: Option<&StaticFields>, cfg: &TrackerConfig) -> Result<TCTrack> {
    cfg.validate()?;
    let analysis = forecast.first().ok_or(Error::Empty { what: "forecast sequence" })?;
    for (i, fs) in forecast.iter().enumerate() {
        let expected = i as u32 * cfg.dt_hours;
        if fs.lead_hours() != expected {
            return Err(Error::InvalidArgument(format!("forecast member {i} has lead {} h, expected {expected} h", fs.lead_hours())));
        }
    }
    let mut track = TCTrack { sid: request.sid.to_string(), init_time: request.init_time, points: Vec::new(), termination: Termination::NoCandidate };
    let Some(first) = first_guess(analysis, request.observed, cfg)? else {
        return Ok(track);
    };
    track.points.push(first);

    for fs in &forecast[1..] {
        let msl = fs.require(VariableId::surface(VarName::MSL))?;
        let estimate = estimate_next_position(&track, fs, cfg)?;
        let region = disk_indices(msl.grid(), estimate, cfg.search_radius_km);
        let mut candidates: Vec<(f64, usize)> = find_local_minima(msl, &region)
            .into_iter()
            .map(|(i, _)| (great_circle_km(estimate, msl.grid().point(i), msl.grid().earth_radius_km), i))
            .collect();
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let extratropical = request.extratropical.is_some_and(|s| s.contains(&fs.valid_time()));
        let mut chosen = None;
        for &(_, i) in &candidates {
            if candidate_valid(i, fs, statics, extratropical, cfg)?.is_valid() {
                chosen = Some(i);
                break;
            }
        }
        let Some(i) = chosen else {
            track.termination = Termination::NoCandidate;
            return Ok(track);
        };
        if statics.is_some_and(|s| s.orography().values()[i] > cfg.terrain_limit_m) {
            track.termination = Termination::HighTerrain;
            return Ok(track);
        }
        track.points.push(fix_at(fs, i, fs.lead_hours(), Some(estimate), cfg)?);
    }
    track.termination = Termination::EndOfForecast;
    Ok(track)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use chrono::NaiveDate;

    fn t0() -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2018, 9, 7).unwrap().and_hms_opt(12, 0, 0).unwrap()
    }

    fn grid() -> GridSpec {
        GridSpec::new(21, 21, 10.0, 1.0, 0.0, 1.0).unwrap()
    }

    fn msl(values: impl FnMut(usize, usize, LatLon) -> f64) -> Field {
        Field::from_fn(grid(), VariableId::surface(VarName::MSL), "hPa", values).unwrap()
    }

    fn uniform_wind_set(lead: u32, levels: &[(u16, f64, f64)]) -> FieldSet {
        let g = GridSpec::new(11, 11, 5.0, 1.0, 0.0, 1.0).unwrap();
        let mut fs = FieldSet::new(t0(), lead).unwrap();
        for &(l, u, v) in levels {
            fs.insert(Field::filled(g, level(VarName::U, l), "m s-1", u).unwrap()).unwrap();
            fs.insert(Field::filled(g, level(VarName::V, l), "m s-1", v).unwrap()).unwrap();
        }
        fs
    }

    #[test]
    fn paraboloid_has_one_minimum() {
        let f = msl(|r, c, _| 1000.0 + ((r as f64 - 8.0).powi(2) + (c as f64 - 12.0).powi(2)));
        let all: Vec<usize> = (0..f.grid().len()).collect();
        assert_eq!(find_local_minima(&f, &all), vec![(f.grid().index(8, 12), 1000.0)]);
    }

    #[test]
    fn constant_field_has_no_minima() {
        let f = msl(|_, _, _| 1000.0);
        let all: Vec<usize> = (0..f.grid().len()).collect();
        assert!(find_local_minima(&f, &all).is_empty());
    }

    #[test]
    fn minima_are_sorted_by_value_then_index() {
        let f = msl(|r, c, _| match (r, c) {
            (5, 5) => 990.0,
            (5, 15) => 980.0,
            (15, 5) => 990.0,
            _ => 1000.0,
        });
        let all: Vec<usize> = (0..f.grid().len()).collect();
        let g = f.grid();
        assert_eq!(
            find_local_minima(&f, &all),
            vec![(g.index(5, 15), 980.0), (g.index(5, 5), 990.0), (g.index(15, 5), 990.0)]
        );
    }

    #[test]
    fn flat_first_guess_picks_first_point_in_scan_order() {
        let mut fs = FieldSet::new(t0(), 0).unwrap();
        fs.insert(msl(|_, _, _| 1005.0)).unwrap();
        fs.insert(Field::filled(grid(), VariableId::surface(VarName::WS10), "m s-1", 3.0).unwrap()).unwrap();
        let obs = LatLon::new(0.0, 10.0);
        let p = first_guess(&fs, obs, &TrackerConfig::default()).unwrap().unwrap();
        let first = disk_indices(&grid(), obs, 445.0)[0];
        assert_eq!((p.lat, p.lon), (grid().point(first).lat, grid().point(first).lon));
        assert_eq!(p.msl_center, 1005.0);
        assert_eq!(p.max_ws10, 3.0);
        assert_eq!(p.vorticity_850, None);
    }

    #[test]
    fn first_guess_needs_msl() {
        let fs = FieldSet::new(t0(), 0).unwrap();
        assert!(matches!(first_guess(&fs, LatLon::new(0.0, 0.0), &TrackerConfig::default()), Err(Error::MissingField(_))));
    }

    #[test]
    fn first_guess_absent_when_disk_is_empty() {
        let mut fs = FieldSet::new(t0(), 0).unwrap();
        fs.insert(msl(|_, _, _| 1005.0)).unwrap();
        assert_eq!(first_guess(&fs, LatLon::new(-60.0, 200.0), &TrackerConfig::default()).unwrap(), None);
    }

    #[test]
    fn steering_at_the_equator() {
        let cfg = TrackerConfig::default();
        let fs = uniform_wind_set(6, &[(200, 5.0, 0.0), (500, 5.0, 0.0), (700, 5.0, 0.0), (850, 5.0, 0.0)]);
        let (dlat, dlon) = steering_displacement(&fs, LatLon::new(0.0, 5.0), &cfg).unwrap();
        assert_eq!(dlat, 0.0);
        // 108 km / 6371 km in degrees
        assert!((dlon - 0.971_267_3).abs() < 1e-6, "{dlon}");
        let (e, _) = steering_vector_km(&fs, LatLon::new(0.0, 5.0), &cfg).unwrap();
        assert!((e - 108.0).abs() < 1e-9);

        let mixed = uniform_wind_set(6, &[(200, 4.0, 0.0), (500, 6.0, 0.0), (700, 5.0, 0.0), (850, 5.0, 0.0)]);
        assert_eq!(steering_displacement(&mixed, LatLon::new(0.0, 5.0), &cfg).unwrap(), (dlat, dlon));

        let calm = uniform_wind_set(6, &[(200, 0.0, 0.0), (500, 0.0, 0.0), (700, 0.0, 0.0), (850, 0.0, 0.0)]);
        assert_eq!(steering_displacement(&calm, LatLon::new(0.0, 5.0), &cfg).unwrap(), (0.0, 0.0));
        assert!(steering_displacement(&calm, LatLon::new(89.6, 5.0), &cfg).is_err());
        let missing = uniform_wind_set(6, &[(200, 0.0, 0.0)]);
        assert!(matches!(steering_displacement(&missing, LatLon::new(0.0, 5.0), &cfg), Err(Error::MissingField(_))));
    }

    fn track_with(points: &[(f64, f64)]) -> TCTrack {
        TCTrack {
            sid: "X".into(),
            init_time: t0(),
            points: points
                .iter()
                .enumerate()
                .map(|(i, &(lat, lon))| TCPoint {
                    lead_hours: 6 * i as u32,
                    lat,
                    lon,
                    msl_center: 990.0,
                    max_ws10: 20.0,
                    vorticity_850: None,
                    estimate: None,
                })
                .collect(),
            termination: Termination::EndOfForecast,
        }
    }

    #[test]
    fn estimate_examples() {
        let cfg = TrackerConfig::default();
        let calm = uniform_wind_set(12, &[(200, 0.0, 0.0), (500, 0.0, 0.0), (700, 0.0, 0.0), (850, 0.0, 0.0)]);
        let still = estimate_next_position(&track_with(&[(0.0, 3.0), (0.0, 3.0)]), &calm, &cfg).unwrap();
        assert_eq!((still.lat, still.lon), (0.0, 3.0));

        let moving = track_with(&[(0.0, 3.0), (0.0, 4.0)]);
        let half = estimate_next_position(&moving, &calm, &cfg).unwrap();
        assert!(half.lat.abs() < 1e-12 && (half.lon - 4.5).abs() < 1e-12);

        let steered = uniform_wind_set(12, &[(200, 5.0, 0.0), (500, 5.0, 0.0), (700, 5.0, 0.0), (850, 5.0, 0.0)]);
        let both = estimate_next_position(&moving, &steered, &cfg).unwrap();
        // (1 + 0.9712673) / 2
        assert!((both.lon - 4.0 - 0.985_633_7).abs() < 1e-6, "{}", both.lon);

        // a single point is advected only
        let one = estimate_next_position(&track_with(&[(0.0, 3.0)]), &steered, &cfg).unwrap();
        assert!((one.lon - 3.971_267_3).abs() < 1e-6);
        assert!(estimate_next_position(&track_with(&[]), &steered, &cfg).is_err());
    }

    #[test]
    fn wind_condition_only_over_land() {
        let g = grid();
        let mut fs = FieldSet::new(t0(), 6).unwrap();
        fs.insert(msl(|_, _, _| 1000.0)).unwrap();
        fs.insert(Field::filled(g, VariableId::surface(VarName::WS10), "m s-1", 7.0).unwrap()).unwrap();
        // solid-body rotation strong enough for the vorticity check
        let u = Field::from_fn(g, level(VarName::U, 850), "m s-1", |_, _, p| -1e-4 * (p.lat - 0.0) * 111_195.0).unwrap();
        let v = Field::from_fn(g, level(VarName::V, 850), "m s-1", |_, _, p| 1e-4 * (p.lon - 10.0) * 111_195.0).unwrap();
        fs.insert(u).unwrap();
        fs.insert(v).unwrap();
        let cfg = TrackerConfig::default();
        let idx = g.index(10, 10);
        let sea = candidate_valid(idx, &fs, None, false, &cfg).unwrap();
        assert_eq!(sea.wind, Check::Skipped);
        assert_eq!(sea.vorticity, Check::Passed);
        assert!(sea.is_valid());
        let land = StaticFields::new(
            Field::filled(g, VariableId::surface(VarName::OROG), "m", 10.0).unwrap(),
            Field::filled(g, VariableId::surface(VarName::LSM), "1", 1.0).unwrap(),
        )
        .unwrap();
        let on_land = candidate_valid(idx, &fs, Some(&land), false, &cfg).unwrap();
        assert_eq!(on_land.wind, Check::Failed);
        assert!(!on_land.is_valid());
        // the thickness check needs Z when the storm is extratropical
        assert!(matches!(candidate_valid(idx, &fs, None, true, &cfg), Err(Error::MissingField(_))));
    }

    #[test]
    fn statics_reject_out_of_range_mask() {
        let g = grid();
        let bad = Field::filled(g, VariableId::surface(VarName::LSM), "1", 1.5).unwrap();
        let orog = Field::filled(g, VariableId::surface(VarName::OROG), "m", 0.0).unwrap();
        assert!(StaticFields::new(orog, bad).is_err());
    }
}
