use alloc::format;
use alloc::vec::Vec;

use chrono::{Duration, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{great_circle_km, lon_delta, normalize_lon, Field, FieldSet, GridSpec, LatLon, VarName, VariableId, TRACKER_LEVELS};
use crate::tracker::StaticFields;

const DEG: f64 = core::f64::consts::PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VortexSpec {
    pub center: LatLon,
    pub r_max_km: f64,
    /// m s⁻¹
    pub v_max: f64,
    /// hPa
    pub ambient_msl: f64,
    /// Central pressure deficit (hPa).
    pub depth: f64,
    /// (east, north) m s⁻¹
    pub steering: (f64, f64),
}

impl VortexSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_max_km > 0.0) || !(self.v_max >= 0.0) || !(self.depth >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "vortex needs r_max_km > 0, v_max >= 0 and depth >= 0, got {}, {}, {}",
                self.r_max_km, self.v_max, self.depth
            )));
        }
        let finite = [self.center.lat, self.center.lon, self.ambient_msl, self.steering.0, self.steering.1];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite vortex parameter".into()));
        }
        Ok(())
    }

    /// Rankine tangential wind at distance `r_km`.
    pub fn tangential_wind(&self, r_km: f64) -> f64 {
        if r_km <= self.r_max_km {
            self.v_max * r_km / self.r_max_km
        } else {
            self.v_max * self.r_max_km / r_km
        }
    }
}

fn level(name: VarName, hpa: u16) -> VariableId {
    VariableId { name, level: Some(hpa) }
}

/// Vortex fields on `grid`: U10/V10 carry the vortex alone, the 850 hPa
/// wind carries vortex plus steering and 200/500/700 hPa carry steering only.
/// MSL = ambient − depth·exp(−r/r_max). Geopotential height dips at 850 hPa
/// and rises at 200 hPa over the centre, so the 200–850 thickness peaks there.
pub fn synthetic_vortex(grid: &GridSpec, spec: &VortexSpec, valid_time: NaiveDateTime, lead_hours: u32) -> Result<FieldSet> {
    spec.validate()?;
    grid.validate()?;
    if !grid.contains(spec.center) {
        return Err(Error::OutOfRange { what: "vortex centre", detail: format!("({}, {}) is outside the grid", spec.center.lat, spec.center.lon) });
    }
    // Cyclonic: anticlockwise in the northern hemisphere.
    let sense = if spec.center.lat >= 0.0 { 1.0 } else { -1.0 };
    let n = grid.len();
    let (mut u, mut v, mut msl, mut bump) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        let p = grid.point(i);
        let r = great_circle_km(spec.center, p, grid.earth_radius_km);
        let east = grid.earth_radius_km * libm::cos((p.lat + spec.center.lat) / 2.0 * DEG) * lon_delta(spec.center.lon, p.lon) * DEG;
        let north = grid.earth_radius_km * (p.lat - spec.center.lat) * DEG;
        let planar = libm::sqrt(east * east + north * north);
        let speed = spec.tangential_wind(r);
        let (ui, vi) = if planar > 0.0 { (-sense * speed * north / planar, sense * speed * east / planar) } else { (0.0, 0.0) };
        u.push(ui);
        v.push(vi);
        let shape = libm::exp(-r / spec.r_max_km);
        msl.push(spec.ambient_msl - spec.depth * shape);
        bump.push(shape);
    }
    let field = |var: VariableId, units: &str, values: Vec<f64>| Field::new(*grid, var, units, values);
    let mut fs = FieldSet::new(valid_time, lead_hours)?;
    fs.insert(field(VariableId::surface(VarName::U10), "m s-1", u.clone())?)?;
    fs.insert(field(VariableId::surface(VarName::V10), "m s-1", v.clone())?)?;
    fs.insert(field(VariableId::surface(VarName::MSL), "hPa", msl)?)?;
    let (su, sv) = spec.steering;
    for lvl in TRACKER_LEVELS {
        let (uu, vv) = if lvl == 850 {
            (u.iter().map(|x| x + su).collect(), v.iter().map(|x| x + sv).collect())
        } else {
            (alloc::vec![su; n], alloc::vec![sv; n])
        };
        fs.insert(field(level(VarName::U, lvl), "m s-1", uu)?)?;
        fs.insert(field(level(VarName::V, lvl), "m s-1", vv)?)?;
        let (base, amp) = match lvl {
            200 => (11800.0, 4.0),
            500 => (5700.0, 0.0),
            700 => (3000.0, 0.0),
            _ => (1500.0, -8.0),
        };
        fs.insert(field(level(VarName::Z, lvl), "m", bump.iter().map(|b| base + amp * spec.depth * b).collect())?)?;
    }
    Ok(fs)
}

/// A vortex carried by its steering flow.
#[derive(Debug, Clone, PartialEq)]
pub struct AdvectedSequence {
    /// Members at leads `0, dt, 2dt, ...`.
    pub fields: Vec<FieldSet>,
    pub centers: Vec<LatLon>,
    /// Set when the centre left the grid interior before `steps` was reached.
    pub truncated: bool,
}

fn interior(grid: &GridSpec, pos: LatLon) -> bool {
    if !grid.contains(pos) {
        return false;
    }
    let (row, col) = grid.nearest(pos);
    let row_ok = row >= 1 && row + 1 < grid.nlat;
    let col_ok = grid.wraps_longitude() || (col >= 1 && col + 1 < grid.nlon);
    row_ok && col_ok
}

/// `steps + 1` members starting at `init_time`, the centre moving by
/// steering·dt between members on the local tangent plane.
pub fn advect_sequence(grid: &GridSpec, spec: &VortexSpec, steps: usize, dt_hours: u32, init_time: NaiveDateTime) -> Result<AdvectedSequence> {
    spec.validate()?;
    if !interior(grid, spec.center) {
        return Err(Error::OutOfRange { what: "vortex centre", detail: "initial centre is not inside the grid interior".into() });
    }
    let dt_s = dt_hours as f64 * 3600.0;
    let mut out = AdvectedSequence { fields: Vec::new(), centers: Vec::new(), truncated: false };
    let mut center = spec.center;
    for step in 0..=steps {
        if !interior(grid, center) {
            out.truncated = true;
            break;
        }
        let lead = step as u32 * dt_hours;
        let s = VortexSpec { center, ..*spec };
        out.fields.push(synthetic_vortex(grid, &s, init_time + Duration::hours(lead as i64), lead)?);
        out.centers.push(center);
        let dlat = spec.steering.1 * dt_s / 1000.0 / grid.earth_radius_km / DEG;
        let dlon = spec.steering.0 * dt_s / 1000.0 / (grid.earth_radius_km * libm::cos(center.lat * DEG)) / DEG;
        center = LatLon::new(center.lat + dlat, normalize_lon(center.lon + dlon));
    }
    Ok(out)
}

/// Sea everywhere except a disk of land of the given height.
pub fn plateau_statics(grid: &GridSpec, center: LatLon, radius_km: f64, height_m: f64) -> Result<StaticFields> {
    let inside = |p: LatLon| great_circle_km(center, p, grid.earth_radius_km) <= radius_km;
    StaticFields::new(
        Field::from_fn(*grid, VariableId::surface(VarName::OROG), "m", |_, _, p| if inside(p) { height_m } else { 0.0 })?,
        Field::from_fn(*grid, VariableId::surface(VarName::LSM), "1", |_, _, p| if inside(p) { 1.0 } else { 0.0 })?,
    )
}
