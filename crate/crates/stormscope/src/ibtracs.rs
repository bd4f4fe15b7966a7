//! Best-track CSV in the IBTrACS v04 layout.

use std::collections::BTreeMap;

use chrono::{NaiveDateTime, Timelike};
use stormscope_core::grid::normalize_lon;
use stormscope_core::track::{ObservedTrack, ObservedTrackPoint, StormNature};

use crate::error::{IoError, Result};

pub const KNOT_MS: f64 = 0.514444;

/// Which agency columns supply intensity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntensityColumns {
    /// Wind column, in knots.
    pub wind: String,
    /// Pressure column, in hPa.
    pub pressure: String,
}

impl Default for IntensityColumns {
    fn default() -> Self {
        Self { wind: "WMO_WIND".into(), pressure: "WMO_PRES".into() }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IbtracsParse {
    /// Sorted by SID.
    pub tracks: Vec<ObservedTrack>,
    /// Rows dropped for not falling on 00/06/12/18 UTC.
    pub off_synoptic: usize,
    /// Rows that could not be read, including repeated times within a storm.
    pub skipped: usize,
}

impl IbtracsParse {
    pub fn track(&self, sid: &str) -> Option<&ObservedTrack> {
        self.tracks.iter().find(|t| t.sid == sid)
    }

    /// Case-insensitive lookup by storm name.
    pub fn by_name(&self, name: &str) -> Vec<&ObservedTrack> {
        self.tracks.iter().filter(|t| t.name.as_deref().is_some_and(|n| n.eq_ignore_ascii_case(name))).collect()
    }
}

fn parse_time(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S")
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M"))
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S"))
        .ok()
}

fn optional(s: Option<&str>) -> std::result::Result<Option<f64>, ()> {
    match s.map(str::trim) {
        None | Some("") => Ok(None),
        Some(v) => v.parse::<f64>().map(Some).map_err(|_| ()),
    }
}

fn nature(s: Option<&str>) -> StormNature {
    match s.map(str::trim) {
        Some("ET") => StormNature::Extratropical,
        Some("TS") | None | Some("") => StormNature::Tropical,
        _ => StormNature::Other,
    }
}

pub fn parse_ibtracs_csv(text: &str) -> Result<IbtracsParse> {
    parse_ibtracs_csv_with(text, &IntensityColumns::default())
}

pub fn parse_ibtracs_csv_with(text: &str, columns: &IntensityColumns) -> Result<IbtracsParse> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let need = |name: &str| col(name).ok_or_else(|| IoError::MissingColumn(name.into()));
    let (sid_c, time_c, lat_c, lon_c) = (need("SID")?, need("ISO_TIME")?, need("LAT")?, need("LON")?);
    let (wind_c, pres_c, nature_c, name_c) = (col(&columns.wind), col(&columns.pressure), col("NATURE"), col("NAME"));

    let mut out = IbtracsParse::default();
    let mut grouped: BTreeMap<String, (Option<String>, BTreeMap<NaiveDateTime, ObservedTrackPoint>)> = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let Ok(record) = record else {
            out.skipped += 1;
            continue;
        };
        let sid = record.get(sid_c).unwrap_or("");
        if sid.is_empty() {
            // the units line under the header
            if i > 0 {
                out.skipped += 1;
            }
            continue;
        }
        let Some(time) = record.get(time_c).and_then(parse_time) else {
            out.skipped += 1;
            continue;
        };
        let lat = record.get(lat_c).and_then(|v| v.parse::<f64>().ok());
        let lon = record.get(lon_c).and_then(|v| v.parse::<f64>().ok());
        let (Some(lat), Some(lon)) = (lat, lon) else {
            out.skipped += 1;
            continue;
        };
        let wind = optional(wind_c.and_then(|c| record.get(c)));
        let pres = optional(pres_c.and_then(|c| record.get(c)));
        let (Ok(wind), Ok(pres)) = (wind, pres) else {
            out.skipped += 1;
            continue;
        };
        if !(-90.0..=90.0).contains(&lat) || !lon.is_finite() {
            out.skipped += 1;
            continue;
        }
        if time.minute() != 0 || time.second() != 0 || time.hour() % 6 != 0 {
            out.off_synoptic += 1;
            continue;
        }
        let point = ObservedTrackPoint {
            time,
            lat,
            lon: normalize_lon(lon),
            max_wind: wind.map(|k| k * KNOT_MS),
            min_pressure: pres,
            nature: nature(nature_c.and_then(|c| record.get(c))),
        };
        let entry = grouped.entry(sid.to_string()).or_default();
        if entry.0.is_none() {
            entry.0 = name_c.and_then(|c| record.get(c)).filter(|n| !n.is_empty() && *n != "NOT_NAMED").map(str::to_string);
        }
        if entry.1.insert(time, point).is_some() {
            out.skipped += 1;
        }
    }
    out.tracks = grouped
        .into_iter()
        .map(|(sid, (name, points))| {
            let points: Vec<_> = points.into_values().collect();
            let gaps = points.windows(2).filter(|w| w[1].time - w[0].time > chrono::Duration::hours(6)).count();
            ObservedTrack { sid, name, points, gaps }
        })
        .collect();
    Ok(out)
}
