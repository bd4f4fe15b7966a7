//! Regular latitude-longitude grids, gridded fields and the geodesy the
//! tracker and verification code are built on.
//!
//! Row 0 is the northernmost latitude; longitudes run eastward from
//! `lon_start`. Values are stored row-major.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use chrono::{NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Pressure levels (hPa) carried by the upper-air variables.
pub const TRACKER_LEVELS: [u16; 4] = [200, 500, 700, 850];

const DEG: f64 = core::f64::consts::PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

impl LatLon {
    pub fn new(lat: f64, lon: f64) -> Self {
        Self { lat, lon }
    }
}

/// Wraps a longitude into `[0, 360)`.
pub fn normalize_lon(lon: f64) -> f64 {
    let wrapped = lon - 360.0 * libm::floor(lon / 360.0);
    if wrapped >= 360.0 {
        0.0
    } else {
        wrapped
    }
}

/// Signed longitude difference `b - a` wrapped into `[-180, 180)`.
pub fn lon_delta(a: f64, b: f64) -> f64 {
    let d = normalize_lon(b - a);
    if d >= 180.0 {
        d - 360.0
    } else {
        d
    }
}

/// Haversine distance in kilometres.
pub fn great_circle_km(a: LatLon, b: LatLon, radius_km: f64) -> f64 {
    let phi1 = a.lat * DEG;
    let phi2 = b.lat * DEG;
    let half_dphi = (phi2 - phi1) / 2.0;
    let half_dlam = lon_delta(a.lon, b.lon) * DEG / 2.0;
    let s1 = libm::sin(half_dphi);
    let s2 = libm::sin(half_dlam);
    let h = s1 * s1 + libm::cos(phi1) * libm::cos(phi2) * s2 * s2;
    2.0 * radius_km * libm::asin(libm::sqrt(h.clamp(0.0, 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nlat: usize,
    pub nlon: usize,
    /// Latitude of row 0 (northernmost).
    pub lat_start: f64,
    /// Positive spacing, applied southward.
    pub lat_step: f64,
    pub lon_start: f64,
    pub lon_step: f64,
    pub earth_radius_km: f64,
}

impl GridSpec {
    pub fn new(
        nlat: usize,
        nlon: usize,
        lat_start: f64,
        lat_step: f64,
        lon_start: f64,
        lon_step: f64,
    ) -> Result<Self> {
        let grid = Self {
            nlat,
            nlon,
            lat_start,
            lat_step,
            lon_start: normalize_lon(lon_start),
            lon_step,
            earth_radius_km: EARTH_RADIUS_KM,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Global grid at the given spacing, north pole to south pole.
    pub fn global(step_deg: f64) -> Result<Self> {
        let nlat = libm::round(180.0 / step_deg) as usize + 1;
        let nlon = libm::round(360.0 / step_deg) as usize;
        Self::new(nlat, nlon, 90.0, step_deg, 0.0, step_deg)
    }

    pub fn with_radius(mut self, earth_radius_km: f64) -> Result<Self> {
        self.earth_radius_km = earth_radius_km;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidGrid(msg));
        if self.nlat < 2 || self.nlon < 2 {
            return bad(format!("need at least 2x2 points, got {}x{}", self.nlat, self.nlon));
        }
        let finite = [self.lat_start, self.lat_step, self.lon_start, self.lon_step, self.earth_radius_km];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("non-finite grid parameter".into());
        }
        if self.lat_step <= 0.0 || self.lon_step <= 0.0 {
            return bad("grid steps must be positive".into());
        }
        if self.earth_radius_km <= 0.0 {
            return bad("earth radius must be positive".into());
        }
        let south = self.lat_start - (self.nlat - 1) as f64 * self.lat_step;
        if self.lat_start > 90.0 + 1e-9 || south < -90.0 - 1e-9 {
            return bad(format!("latitudes span [{south}, {}] outside [-90, 90]", self.lat_start));
        }
        if self.nlon as f64 * self.lon_step > 360.0 + 1e-6 {
            return bad("longitudes overlap themselves".into());
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nlat * self.nlon
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn lat(&self, row: usize) -> f64 {
        self.lat_start - row as f64 * self.lat_step
    }

    pub fn lon(&self, col: usize) -> f64 {
        normalize_lon(self.lon_start + col as f64 * self.lon_step)
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.nlon + col
    }

    pub fn row_col(&self, index: usize) -> (usize, usize) {
        (index / self.nlon, index % self.nlon)
    }

    pub fn point(&self, index: usize) -> LatLon {
        let (row, col) = self.row_col(index);
        LatLon::new(self.lat(row), self.lon(col))
    }

    /// True when the columns close the full circle, so column `nlon - 1`
    /// neighbours column 0.
    pub fn wraps_longitude(&self) -> bool {
        libm::fabs(self.nlon as f64 * self.lon_step - 360.0) < 1e-6
    }

    /// Column index of `offset` columns east of `col`, or `None` when a
    /// regional grid has no such column.
    pub fn col_offset(&self, col: usize, offset: isize) -> Option<usize> {
        let c = col as isize + offset;
        if (0..self.nlon as isize).contains(&c) {
            Some(c as usize)
        } else if self.wraps_longitude() {
            Some(c.rem_euclid(self.nlon as isize) as usize)
        } else {
            None
        }
    }

    pub fn row_offset(&self, row: usize, offset: isize) -> Option<usize> {
        let r = row as isize + offset;
        (0..self.nlat as isize).contains(&r).then_some(r as usize)
    }

    /// Nearest gridpoint by latitude/longitude rounding. Rows clamp at the
    /// grid edge; columns wrap on global grids and clamp otherwise.
    pub fn nearest(&self, pos: LatLon) -> (usize, usize) {
        let r = libm::round((self.lat_start - pos.lat) / self.lat_step);
        let row = r.clamp(0.0, (self.nlat - 1) as f64) as usize;
        let dlon = normalize_lon(pos.lon - self.lon_start);
        let c = libm::round(dlon / self.lon_step) as isize;
        let col = if self.wraps_longitude() {
            c.rem_euclid(self.nlon as isize) as usize
        } else {
            // a point west of lon_start shows up as a large positive dlon
            let c_west = libm::round((dlon - 360.0) / self.lon_step) as isize;
            let pick = if c < self.nlon as isize { c } else if -c_west < c - (self.nlon as isize - 1) { c_west } else { c };
            pick.clamp(0, self.nlon as isize - 1) as usize
        };
        (row, col)
    }

    /// Whether `pos` lies inside the grid's latitude band and (for regional
    /// grids) its longitude span.
    pub fn contains(&self, pos: LatLon) -> bool {
        let south = self.lat(self.nlat - 1);
        if !(pos.lat <= self.lat_start + 1e-9 && pos.lat >= south - 1e-9) {
            return false;
        }
        if self.wraps_longitude() {
            return true;
        }
        normalize_lon(pos.lon - self.lon_start) <= (self.nlon - 1) as f64 * self.lon_step + 1e-9
    }
}

/// Indices of every gridpoint whose great-circle distance to `center` is at
/// most `radius_km`, in ascending order.
pub fn disk_indices(grid: &GridSpec, center: LatLon, radius_km: f64) -> Vec<usize> {
    let mut out = Vec::new();
    if !(radius_km > 0.0) {
        return out;
    }
    let r = grid.earth_radius_km;
    let ang = radius_km / r;
    if ang >= core::f64::consts::PI {
        return (0..grid.len()).collect();
    }
    let dlat_deg = ang / DEG;
    let hav_r = {
        let s = libm::sin(ang / 2.0);
        s * s
    };
    let cos_c = libm::cos(center.lat * DEG);
    for row in 0..grid.nlat {
        let lat = grid.lat(row);
        if libm::fabs(lat - center.lat) > dlat_deg + grid.lat_step {
            continue;
        }
        // Longitude half-width admitted at this latitude, widened by one
        // column; membership is decided by the exact distance below.
        let s = libm::sin((lat - center.lat) * DEG / 2.0);
        let denom = cos_c * libm::cos(lat * DEG);
        let half_width = if denom <= 1e-12 {
            360.0
        } else {
            let q = (hav_r - s * s) / denom;
            if q >= 1.0 {
                360.0
            } else if q < 0.0 {
                0.0
            } else {
                2.0 * libm::asin(libm::sqrt(q)) / DEG
            }
        } + grid.lon_step;
        for col in 0..grid.nlon {
            let lon = grid.lon(col);
            if half_width < 180.0 && libm::fabs(lon_delta(center.lon, lon)) > half_width {
                continue;
            }
            if great_circle_km(center, LatLon::new(lat, lon), r) <= radius_km {
                out.push(grid.index(row, col));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VarName {
    T2M,
    U10,
    V10,
    MSL,
    TP,
    WS10,
    U,
    V,
    Z,
    /// Wind speed on a pressure level.
    WS,
    /// Relative vorticity on a pressure level.
    VO,
    /// Geopotential thickness between two levels.
    THK,
    /// Orography height (m).
    OROG,
    /// Land-sea mask (land fraction).
    LSM,
}

impl VarName {
    pub const SURFACE: [VarName; 5] = [VarName::T2M, VarName::U10, VarName::V10, VarName::MSL, VarName::TP];

    pub fn is_upper_air(self) -> bool {
        matches!(self, VarName::U | VarName::V | VarName::Z | VarName::WS | VarName::VO)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VarName::T2M => "T2M",
            VarName::U10 => "U10",
            VarName::V10 => "V10",
            VarName::MSL => "MSL",
            VarName::TP => "TP",
            VarName::WS10 => "WS10",
            VarName::U => "U",
            VarName::V => "V",
            VarName::Z => "Z",
            VarName::WS => "WS",
            VarName::VO => "VO",
            VarName::THK => "THK",
            VarName::OROG => "OROG",
            VarName::LSM => "LSM",
        }
    }
}

/// A variable plus, for upper-air variables, its pressure level in hPa.
///
/// Text form is the name followed by the level, e.g. `T2M`, `U850`, `Z200`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VariableId {
    pub name: VarName,
    pub level: Option<u16>,
}

impl VariableId {
    pub const fn surface(name: VarName) -> Self {
        Self { name, level: None }
    }

    pub fn upper(name: VarName, level: u16) -> Result<Self> {
        let id = Self { name, level: Some(level) };
        id.validate()?;
        Ok(id)
    }

    pub fn validate(&self) -> Result<()> {
        match (self.name.is_upper_air(), self.level) {
            (false, None) => Ok(()),
            (true, Some(l)) if TRACKER_LEVELS.contains(&l) => Ok(()),
            (true, Some(l)) => Err(Error::InvalidVariable(format!(
                "{} level {l} hPa is not one of {TRACKER_LEVELS:?}",
                self.name.as_str()
            ))),
            (true, None) => Err(Error::InvalidVariable(format!("{} needs a pressure level", self.name.as_str()))),
            (false, Some(_)) => Err(Error::InvalidVariable(format!("{} takes no pressure level", self.name.as_str()))),
        }
    }
}

impl fmt::Display for VariableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.level {
            Some(l) => write!(f, "{}{}", self.name.as_str(), l),
            None => f.write_str(self.name.as_str()),
        }
    }
}

impl FromStr for VariableId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        const NAMES: [VarName; 14] = [
            VarName::T2M,
            VarName::U10,
            VarName::V10,
            VarName::MSL,
            VarName::TP,
            VarName::WS10,
            VarName::THK,
            VarName::OROG,
            VarName::LSM,
            VarName::WS,
            VarName::VO,
            VarName::U,
            VarName::V,
            VarName::Z,
        ];
        let s = s.trim();
        for name in NAMES {
            if name.is_upper_air() {
                if let Some(rest) = s.strip_prefix(name.as_str()) {
                    if let Ok(level) = rest.parse::<u16>() {
                        return VariableId::upper(name, level);
                    }
                }
            } else if s == name.as_str() {
                return Ok(VariableId::surface(name));
            }
        }
        Err(Error::InvalidVariable(format!("unrecognised variable {s:?}")))
    }
}

impl Serialize for VariableId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> core::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for VariableId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> core::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One scalar variable on a grid.
///
/// Unless the field was built with [`Field::new_masked`], every value is
/// finite. Masked fields use NaN for missing points.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    variable: VariableId,
    units: String,
    values: Vec<f64>,
    masked: bool,
}

impl Field {
    pub fn new(grid: GridSpec, variable: VariableId, units: &str, values: Vec<f64>) -> Result<Self> {
        let field = Self::new_masked(grid, variable, units, values)?;
        if let Some(i) = field.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField { variable, reason: format!("non-finite value at index {i}") });
        }
        Ok(Self { masked: false, ..field })
    }

    /// Like [`Field::new`] but NaN marks missing points.
    pub fn new_masked(grid: GridSpec, variable: VariableId, units: &str, values: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        variable.validate()?;
        if values.len() != grid.len() {
            return Err(Error::InvalidField {
                variable,
                reason: format!("expected {}x{} = {} values, got {}", grid.nlat, grid.nlon, grid.len(), values.len()),
            });
        }
        if values.iter().any(|v| v.is_infinite()) {
            return Err(Error::InvalidField { variable, reason: "infinite value".into() });
        }
        Ok(Self { grid, variable, units: units.to_string(), values, masked: true })
    }

    pub fn filled(grid: GridSpec, variable: VariableId, units: &str, value: f64) -> Result<Self> {
        Self::new(grid, variable, units, alloc::vec![value; grid.len()])
    }

    /// Builds a field by evaluating `f(row, col, point)` at every gridpoint.
    pub fn from_fn(
        grid: GridSpec,
        variable: VariableId,
        units: &str,
        mut f: impl FnMut(usize, usize, LatLon) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for row in 0..grid.nlat {
            for col in 0..grid.nlon {
                values.push(f(row, col, LatLon::new(grid.lat(row), grid.lon(col))));
            }
        }
        Self::new(grid, variable, units, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn variable(&self) -> VariableId {
        self.variable
    }

    pub fn units(&self) -> &str {
        &self.units
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_masked(&self) -> bool {
        self.masked
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[self.grid.index(row, col)]
    }

    /// Same field relabelled; the values are untouched.
    pub fn with_variable(mut self, variable: VariableId, units: &str) -> Result<Self> {
        variable.validate()?;
        self.variable = variable;
        self.units = units.to_string();
        Ok(self)
    }

    /// Applies `f` pointwise, keeping grid, variable and units.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = self.values.iter().map(|&v| f(v)).collect();
        if self.masked {
            Self::new_masked(self.grid, self.variable, &self.units, values)
        } else {
            Self::new(self.grid, self.variable, &self.units, values)
        }
    }

    /// Maximum over `indices`, ignoring NaN. `None` if nothing is finite.
    pub fn max_over(&self, indices: &[usize]) -> Option<f64> {
        indices.iter().map(|&i| self.values[i]).filter(|v| !v.is_nan()).reduce(f64::max)
    }
}

pub(crate) fn ensure_same_grid(a: &Field, b: &Field) -> Result<()> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch(format!(
            "{} is on {}x{} grid, {} is on {}x{} grid (or origins/spacing differ)",
            a.variable(),
            a.grid().nlat,
            a.grid().nlon,
            b.variable(),
            b.grid().nlat,
            b.grid().nlon
        )));
    }
    Ok(())
}

/// All fields valid at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSet {
    valid_time: NaiveDateTime,
    lead_hours: u32,
    fields: BTreeMap<VariableId, Field>,
}

pub(crate) fn check_six_hourly(time: NaiveDateTime) -> Result<()> {
    if time.hour() % 6 != 0 || time.minute() != 0 || time.second() != 0 || time.nanosecond() != 0 {
        return Err(Error::OutOfRange { what: "valid time", detail: format!("{time} is not 6-hour aligned") });
    }
    Ok(())
}

impl FieldSet {
    pub fn new(valid_time: NaiveDateTime, lead_hours: u32) -> Result<Self> {
        check_six_hourly(valid_time)?;
        if lead_hours % 6 != 0 {
            return Err(Error::OutOfRange { what: "lead time", detail: format!("{lead_hours} h is not a multiple of 6") });
        }
        Ok(Self { valid_time, lead_hours, fields: BTreeMap::new() })
    }

    pub fn with_fields(valid_time: NaiveDateTime, lead_hours: u32, fields: impl IntoIterator<Item = Field>) -> Result<Self> {
        let mut set = Self::new(valid_time, lead_hours)?;
        for f in fields {
            set.insert(f)?;
        }
        Ok(set)
    }

    pub fn valid_time(&self) -> NaiveDateTime {
        self.valid_time
    }

    pub fn lead_hours(&self) -> u32 {
        self.lead_hours
    }

    /// Adds or replaces a field; it must share the grid of existing members.
    pub fn insert(&mut self, field: Field) -> Result<Option<Field>> {
        if let Some(existing) = self.fields.values().next() {
            ensure_same_grid(existing, &field)?;
        }
        Ok(self.fields.insert(field.variable(), field))
    }

    pub fn get(&self, var: VariableId) -> Option<&Field> {
        self.fields.get(&var)
    }

    pub fn require(&self, var: VariableId) -> Result<&Field> {
        self.get(var).ok_or(Error::MissingField(var))
    }

    pub fn grid(&self) -> Option<&GridSpec> {
        self.fields.values().next().map(Field::grid)
    }

    pub fn variables(&self) -> impl Iterator<Item = VariableId> + '_ {
        self.fields.keys().copied()
    }

    pub fn fields(&self) -> impl Iterator<Item = &Field> {
        self.fields.values()
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }
}

/// Pointwise `sqrt(u² + v²)`.
pub fn wind_speed(u: &Field, v: &Field) -> Result<Field> {
    ensure_same_grid(u, v)?;
    let (un, vn) = (u.variable(), v.variable());
    let out = match (un.name, vn.name) {
        (VarName::U10, VarName::V10) => VariableId::surface(VarName::WS10),
        (VarName::U, VarName::V) if un.level == vn.level => VariableId { name: VarName::WS, level: un.level },
        _ => return Err(Error::InvalidVariable(format!("wind speed needs matching U/V components, got {un} and {vn}"))),
    };
    let values = u.values().iter().zip(v.values()).map(|(a, b)| libm::sqrt(a * a + b * b)).collect();
    derived(*u.grid(), out, "m s-1", values, u.is_masked() || v.is_masked())
}

fn derived(grid: GridSpec, var: VariableId, units: &str, values: Vec<f64>, masked: bool) -> Result<Field> {
    if masked {
        Field::new_masked(grid, var, units, values)
    } else {
        Field::new(grid, var, units, values)
    }
}

/// `z200 - z850` pointwise.
pub fn thickness(z200: &Field, z850: &Field) -> Result<Field> {
    ensure_same_grid(z200, z850)?;
    let values = z200.values().iter().zip(z850.values()).map(|(a, b)| a - b).collect();
    derived(*z200.grid(), VariableId::surface(VarName::THK), z200.units(), values, z200.is_masked() || z850.is_masked())
}

/// Relative vorticity `dv/dx - du/dy` at one gridpoint (s⁻¹), using
/// central differences on the sphere with one-sided differences at the
/// north/south rows and at the edges of regional grids.
pub fn vorticity_at(u: &Field, v: &Field, row: usize, col: usize) -> f64 {
    let g = u.grid();
    let r_m = g.earth_radius_km * 1000.0;
    let dphi = g.lat_step * DEG;
    let dlam = g.lon_step * DEG;

    // y increases northward, i.e. toward smaller row indices.
    let (north, south) = (g.row_offset(row, -1).unwrap_or(row), g.row_offset(row, 1).unwrap_or(row));
    let du_dy = (u.get(north, col) - u.get(south, col)) / ((south - north) as f64 * r_m * dphi);

    let cos_phi = libm::cos(g.lat(row) * DEG);
    let dv_dx = if libm::fabs(cos_phi) < 1e-9 {
        0.0
    } else {
        let (west, east) = (g.col_offset(col, -1), g.col_offset(col, 1));
        let (w, e, span) = match (west, east) {
            (Some(w), Some(e)) => (w, e, 2.0),
            (None, Some(e)) => (col, e, 1.0),
            (Some(w), None) => (w, col, 1.0),
            (None, None) => return -du_dy,
        };
        (v.get(row, e) - v.get(row, w)) / (span * r_m * cos_phi * dlam)
    };
    dv_dx - du_dy
}

/// Relative vorticity over the whole grid; see [`vorticity_at`].
pub fn relative_vorticity(u: &Field, v: &Field) -> Result<Field> {
    ensure_same_grid(u, v)?;
    if u.variable().level != v.variable().level {
        return Err(Error::InvalidVariable(format!("{} and {} are on different levels", u.variable(), v.variable())));
    }
    let g = *u.grid();
    if g.nlat < 3 {
        return Err(Error::InvalidGrid(format!("vorticity needs at least 3 rows, got {}", g.nlat)));
    }
    let mut values = Vec::with_capacity(g.len());
    for row in 0..g.nlat {
        for col in 0..g.nlon {
            values.push(vorticity_at(u, v, row, col));
        }
    }
    let var = VariableId { name: VarName::VO, level: u.variable().level };
    derived(g, var, "s-1", values, u.is_masked() || v.is_masked())
}
