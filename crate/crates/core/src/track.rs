//! Cyclone track records: tracker output, best-track observations and
//! operational forecast tracks.

use alloc::string::String;
use alloc::vec::Vec;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::grid::LatLon;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TCPoint {
    pub lead_hours: u32,
    pub lat: f64,
    pub lon: f64,
    /// Centre mean sea-level pressure (hPa).
    pub msl_center: f64,
    /// Maximum 10 m wind speed near the centre (m s⁻¹).
    pub max_ws10: f64,
    /// Maximum |850 hPa relative vorticity| near the centre (s⁻¹), when available.
    pub vorticity_850: Option<f64>,
    /// Position estimate the candidate search was centred on. `None` for the
    /// first-guess point in the analysis.
    pub estimate: Option<LatLon>,
}

impl TCPoint {
    pub fn position(&self) -> LatLon {
        LatLon::new(self.lat, self.lon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    EndOfForecast,
    NoCandidate,
    HighTerrain,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::EndOfForecast => "end_of_forecast",
            Termination::NoCandidate => "no_candidate",
            Termination::HighTerrain => "high_terrain",
        }
    }
}

/// One tracked storm for one initialisation. `points[0]` is the analysis
/// (lead 0) position found by the first guess; the track is empty when the
/// first guess failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TCTrack {
    pub sid: String,
    pub init_time: NaiveDateTime,
    pub points: Vec<TCPoint>,
    pub termination: Termination,
}

impl TCTrack {
    pub fn valid_time(&self, lead_hours: u32) -> NaiveDateTime {
        self.init_time + chrono::Duration::hours(lead_hours as i64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StormNature {
    Tropical,
    Extratropical,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedTrackPoint {
    pub time: NaiveDateTime,
    pub lat: f64,
    pub lon: f64,
    /// m s⁻¹
    pub max_wind: Option<f64>,
    /// hPa
    pub min_pressure: Option<f64>,
    pub nature: StormNature,
}

/// Best-track record of one storm, 6-hourly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedTrack {
    pub sid: String,
    pub name: Option<String>,
    pub points: Vec<ObservedTrackPoint>,
    /// Number of places where consecutive points are more than 6 h apart.
    pub gaps: usize,
}

impl ObservedTrack {
    pub fn point_at(&self, time: NaiveDateTime) -> Option<&ObservedTrackPoint> {
        self.points.binary_search_by_key(&time, |p| p.time).ok().map(|i| &self.points[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastTrackPoint {
    pub time: NaiveDateTime,
    pub lat: f64,
    pub lon: f64,
    /// Central pressure (hPa).
    pub pressure: Option<f64>,
    /// Maximum wind (m s⁻¹).
    pub max_wind: Option<f64>,
}

/// A deterministic operational forecast track.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastTrack {
    pub id: String,
    pub name: Option<String>,
    pub base_time: Option<NaiveDateTime>,
    pub points: Vec<ForecastTrackPoint>,
}
