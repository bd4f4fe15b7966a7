//! FPK1 field packs.
//!
//! ```text
//! "FPK1" | u32 LE header length | UTF-8 JSON header | f32 LE payload
//! ```
//!
//! The payload holds one row-major `nlat x nlon` array per (time, variable),
//! times outermost. The header carries the grid, the ordered variable names,
//! the ordered times and free-form string attributes.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use stormscope_core::climatology::ClimatologyCube;
use stormscope_core::tracker::StaticFields;
use stormscope_core::{Field, FieldSet, GridSpec, VarName, VariableId};

use crate::error::{IoError, Result};

pub const MAGIC: &[u8; 4] = b"FPK1";
const FORMAT: &str = "FPK1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackTime {
    pub valid_time: NaiveDateTime,
    pub lead_hours: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    format: String,
    grid: GridSpec,
    variables: Vec<String>,
    times: Vec<PackTime>,
    #[serde(default)]
    attrs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldPack {
    pub grid: GridSpec,
    pub variables: Vec<String>,
    pub times: Vec<PackTime>,
    pub attrs: BTreeMap<String, String>,
    /// `times.len() * variables.len()` arrays of `grid.len()` values.
    pub data: Vec<f32>,
}

impl FieldPack {
    pub fn new(grid: GridSpec, variables: Vec<String>) -> Self {
        Self { grid, variables, times: Vec::new(), attrs: BTreeMap::new(), data: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        let mut seen = std::collections::BTreeSet::new();
        for v in &self.variables {
            if v.is_empty() || !seen.insert(v.as_str()) {
                return Err(IoError::Dimension(format!("variable name {v:?} is empty or repeated")));
            }
        }
        let expected = self.times.len() * self.variables.len() * self.grid.len();
        if self.data.len() != expected {
            return Err(IoError::Dimension(format!(
                "{} times x {} variables x {} points needs {expected} values, have {}",
                self.times.len(),
                self.variables.len(),
                self.grid.len(),
                self.data.len()
            )));
        }
        Ok(())
    }

    /// Appends one time with one array per variable, in variable order.
    pub fn push_time(&mut self, time: PackTime, arrays: &[&[f64]]) -> Result<()> {
        if arrays.len() != self.variables.len() || arrays.iter().any(|a| a.len() != self.grid.len()) {
            return Err(IoError::Dimension("time slice does not match the variables and grid".into()));
        }
        self.times.push(time);
        for a in arrays {
            self.data.extend(a.iter().map(|&v| v as f32));
        }
        Ok(())
    }

    pub fn array(&self, time: usize, variable: usize) -> &[f32] {
        let n = self.grid.len();
        let start = (time * self.variables.len() + variable) * n;
        &self.data[start..start + n]
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == name)
    }

    pub fn array_f64(&self, time: usize, variable: usize) -> Vec<f64> {
        self.array(time, variable).iter().map(|&v| v as f64).collect()
    }

    pub fn write_to(&self, sink: &mut impl Write) -> Result<u64> {
        self.validate()?;
        let header = Header {
            format: FORMAT.into(),
            grid: self.grid,
            variables: self.variables.clone(),
            times: self.times.clone(),
            attrs: self.attrs.clone(),
        };
        let json = serde_json::to_vec(&header)?;
        let len = u32::try_from(json.len()).map_err(|_| IoError::Dimension("header longer than 4 GiB".into()))?;
        sink.write_all(MAGIC)?;
        sink.write_all(&len.to_le_bytes())?;
        sink.write_all(&json)?;
        let mut payload = Vec::with_capacity(self.data.len() * 4);
        for v in &self.data {
            payload.extend_from_slice(&v.to_le_bytes());
        }
        sink.write_all(&payload)?;
        Ok(8 + json.len() as u64 + payload.len() as u64)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        self.write_to(&mut out)?;
        Ok(out)
    }

    pub fn read_from(source: &mut impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        source.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || &bytes[..4] != MAGIC {
            return Err(IoError::BadMagic);
        }
        let Some(len_bytes) = bytes.get(4..8) else {
            return Err(IoError::TruncatedHeader { offset: 4, detail: "missing header length".into() });
        };
        let hlen = u32::from_le_bytes(len_bytes.try_into().expect("four bytes")) as usize;
        let Some(json) = bytes.get(8..8 + hlen) else {
            return Err(IoError::TruncatedHeader { offset: 8, detail: format!("need {hlen} header bytes, found {}", bytes.len() - 8) });
        };
        let header: Header = serde_json::from_slice(json).map_err(|e| IoError::Header { offset: 8, detail: e.to_string() })?;
        if header.format != FORMAT {
            return Err(IoError::Header { offset: 8, detail: format!("format {:?} is not {FORMAT}", header.format) });
        }
        header.grid.validate().map_err(|e| IoError::Header { offset: 8, detail: e.to_string() })?;
        let start = 8 + hlen;
        let count = header
            .times
            .len()
            .checked_mul(header.variables.len())
            .and_then(|n| n.checked_mul(header.grid.len()))
            .ok_or_else(|| IoError::Header { offset: 8, detail: "payload size overflows".into() })?;
        let expected = count as u64 * 4;
        let found = (bytes.len() - start) as u64;
        if found < expected {
            return Err(IoError::TruncatedPayload { offset: bytes.len() as u64, expected, found });
        }
        if found > expected {
            return Err(IoError::TrailingBytes { offset: start as u64 + expected });
        }
        let data = bytes[start..].chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("four bytes"))).collect();
        let pack = FieldPack { grid: header.grid, variables: header.variables, times: header.times, attrs: header.attrs, data };
        pack.validate()?;
        Ok(pack)
    }

    pub fn write_file(&self, path: &Path) -> Result<u64> {
        let bytes = self.to_bytes()?;
        std::fs::write(path, &bytes).map_err(|source| IoError::File { path: path.to_path_buf(), source })?;
        Ok(bytes.len() as u64)
    }

    /// Reads a plain or gzip-compressed pack.
    pub fn read_file(path: &Path) -> Result<Self> {
        let bytes = crate::gz::read_bytes(path)?;
        Self::from_bytes(&bytes).map_err(|e| match e {
            IoError::File { .. } => e,
            other => IoError::Data(format!("{}: {other}", path.display())),
        })
    }

    /// Packs field sets that share one grid and one variable list.
    pub fn from_fieldsets(members: &[FieldSet]) -> Result<Self> {
        let first = members.first().ok_or_else(|| IoError::Data("no field sets to pack".into()))?;
        let grid = *first.grid().ok_or_else(|| IoError::Data("empty field set".into()))?;
        let vars: Vec<VariableId> = first.variables().collect();
        let mut pack = FieldPack::new(grid, vars.iter().map(|v| v.to_string()).collect());
        for fs in members {
            if fs.grid() != Some(&grid) || !fs.variables().eq(vars.iter().copied()) {
                return Err(IoError::Dimension(format!("member at {} differs in grid or variables", fs.valid_time())));
            }
            let arrays: Vec<&[f64]> = vars.iter().map(|&v| fs.require(v).map(Field::values)).collect::<Result<_, _>>()?;
            pack.push_time(PackTime { valid_time: fs.valid_time(), lead_hours: fs.lead_hours() }, &arrays)?;
        }
        Ok(pack)
    }

    /// One field set per time. Arrays containing NaN become masked fields.
    pub fn to_fieldsets(&self) -> Result<Vec<FieldSet>> {
        self.fieldsets_of(|name| Some(name.to_string()))
    }

    /// Field sets built from the variables whose name `rename` maps to a
    /// plain variable name; other variables are ignored.
    pub fn fieldsets_of(&self, rename: impl Fn(&str) -> Option<String>) -> Result<Vec<FieldSet>> {
        let mut chosen = Vec::new();
        for (i, name) in self.variables.iter().enumerate() {
            if let Some(plain) = rename(name) {
                let id: VariableId = plain.parse()?;
                chosen.push((i, id));
            }
        }
        let mut out = Vec::with_capacity(self.times.len());
        for (ti, t) in self.times.iter().enumerate() {
            let mut fs = FieldSet::new(t.valid_time, t.lead_hours)?;
            for &(vi, id) in &chosen {
                let values = self.array_f64(ti, vi);
                let field = if values.iter().any(|v| v.is_nan()) {
                    Field::new_masked(self.grid, id, "", values)?
                } else {
                    Field::new(self.grid, id, "", values)?
                };
                fs.insert(field)?;
            }
            out.push(fs);
        }
        Ok(out)
    }
}

const CUBE_YEAR: i32 = 2000;
const CUBE_HOURS: [u32; 4] = [0, 6, 12, 18];

fn cube_time(month: u32, hour: u32) -> PackTime {
    let t = chrono::NaiveDate::from_ymd_opt(CUBE_YEAR, month, 1).and_then(|d| d.and_hms_opt(hour, 0, 0)).expect("valid month and hour");
    PackTime { valid_time: t, lead_hours: 0 }
}

/// Stores a climatology cube as 48 times (one per month and synoptic hour, in
/// a placeholder year) holding `clim:<var>:p<pct>`, `clim:<var>:mean` and
/// `clim:<var>:count` arrays.
pub fn cube_to_pack(cube: &ClimatologyCube) -> Result<FieldPack> {
    let var = cube.variable();
    let mut names: Vec<String> = cube.percentiles().iter().map(|p| format!("clim:{var}:p{p}")).collect();
    names.push(format!("clim:{var}:mean"));
    names.push(format!("clim:{var}:count"));
    let mut pack = FieldPack::new(*cube.grid(), names);
    pack.attrs.insert("kind".into(), "climatology".into());
    pack.attrs.insert("variable".into(), var.to_string());
    let n = cube.grid().len();
    let np = cube.percentiles().len();
    for (cell, (month, hour)) in (1..=12u32).flat_map(|m| CUBE_HOURS.iter().map(move |&h| (m, h))).enumerate() {
        let mut arrays: Vec<Vec<f64>> = (0..np).map(|pi| cube.thresholds()[(cell * np + pi) * n..(cell * np + pi + 1) * n].to_vec()).collect();
        arrays.push(cube.means()[cell * n..(cell + 1) * n].to_vec());
        arrays.push(cube.counts()[cell * n..(cell + 1) * n].iter().map(|&c| c as f64).collect());
        let refs: Vec<&[f64]> = arrays.iter().map(Vec::as_slice).collect();
        pack.push_time(cube_time(month, hour), &refs)?;
    }
    Ok(pack)
}

pub fn cube_from_pack(pack: &FieldPack) -> Result<ClimatologyCube> {
    pack.validate()?;
    let bad = |detail: String| IoError::Data(format!("not a climatology pack: {detail}"));
    let var_name = pack.attrs.get("variable").ok_or_else(|| bad("no variable attribute".into()))?;
    let var: VariableId = var_name.parse()?;
    let prefix = format!("clim:{var}:");
    let mut percentiles = Vec::new();
    let mut pct_idx = Vec::new();
    for (i, name) in pack.variables.iter().enumerate() {
        if let Some(p) = name.strip_prefix(&prefix).and_then(|r| r.strip_prefix('p')) {
            percentiles.push(p.parse::<f64>().map_err(|_| bad(format!("percentile in {name:?}")))?);
            pct_idx.push(i);
        }
    }
    let mean_idx = pack.variable_index(&format!("{prefix}mean")).ok_or_else(|| bad("no mean array".into()))?;
    let count_idx = pack.variable_index(&format!("{prefix}count")).ok_or_else(|| bad("no count array".into()))?;
    let expected: Vec<PackTime> = (1..=12u32).flat_map(|m| CUBE_HOURS.iter().map(move |&h| cube_time(m, h))).collect();
    if pack.times != expected {
        return Err(bad("times are not the 48 month and hour cells".into()));
    }
    let mut thresholds = Vec::new();
    let mut mean = Vec::new();
    let mut counts = Vec::new();
    for t in 0..pack.times.len() {
        for &pi in &pct_idx {
            thresholds.extend(pack.array_f64(t, pi));
        }
        mean.extend(pack.array_f64(t, mean_idx));
        counts.extend(pack.array(t, count_idx).iter().map(|&c| c as u32));
    }
    Ok(ClimatologyCube::from_parts(var, pack.grid, percentiles, thresholds, mean, counts)?)
}

/// Orography (m) and land-sea mask as a single-time pack.
pub fn statics_to_pack(statics: &StaticFields) -> Result<FieldPack> {
    let grid = *statics.orography().grid();
    let mut pack = FieldPack::new(grid, vec!["OROG".into(), "LSM".into()]);
    pack.attrs.insert("kind".into(), "statics".into());
    let t = chrono::NaiveDate::from_ymd_opt(CUBE_YEAR, 1, 1).and_then(|d| d.and_hms_opt(0, 0, 0)).expect("valid date");
    pack.push_time(PackTime { valid_time: t, lead_hours: 0 }, &[statics.orography().values(), statics.land_sea_mask().values()])?;
    Ok(pack)
}

pub fn statics_from_pack(pack: &FieldPack) -> Result<StaticFields> {
    pack.validate()?;
    if pack.times.is_empty() {
        return Err(IoError::Data("statics pack has no time".into()));
    }
    let get = |name: &str, var: VarName, units: &str| -> Result<Field> {
        let i = pack.variable_index(name).ok_or_else(|| IoError::Data(format!("statics pack lacks {name}")))?;
        Ok(Field::new(pack.grid, VariableId::surface(var), units, pack.array_f64(0, i))?)
    };
    Ok(StaticFields::new(get("OROG", VarName::OROG, "m")?, get("LSM", VarName::LSM, "1")?)?)
}
