//! Pairs forecast tracks with reference tracks and scores position and
//! intensity errors per lead time.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::grid::{great_circle_km, LatLon, EARTH_RADIUS_KM};
use crate::track::{ObservedTrack, TCPoint, TCTrack};

/// Reference position and intensity at one valid time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferencePoint {
    pub lat: f64,
    pub lon: f64,
    pub msl_hpa: Option<f64>,
    pub max_ws10: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
pub enum Reference<'a> {
    Observed(&'a ObservedTrack),
    Tracked(&'a TCTrack),
}

impl Reference<'_> {
    fn at(&self, time: NaiveDateTime) -> Option<ReferencePoint> {
        match self {
            Reference::Observed(t) => t.point_at(time).map(|p| ReferencePoint {
                lat: p.lat,
                lon: p.lon,
                msl_hpa: p.min_pressure,
                max_ws10: p.max_wind,
            }),
            Reference::Tracked(t) => t.points.iter().find(|p| t.valid_time(p.lead_hours) == time).map(|p| ReferencePoint {
                lat: p.lat,
                lon: p.lon,
                msl_hpa: Some(p.msl_center).filter(|v| v.is_finite()),
                max_ws10: Some(p.max_ws10).filter(|v| v.is_finite()),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub lead_hours: u32,
    pub forecast: TCPoint,
    pub reference: ReferencePoint,
}

impl MatchedPair {
    pub fn distance_km(&self) -> f64 {
        great_circle_km(self.forecast.position(), LatLon::new(self.reference.lat, self.reference.lon), EARTH_RADIUS_KM)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchedSeries {
    pub pairs: Vec<MatchedPair>,
    /// Forecast points with no reference at their valid time.
    pub unmatched: usize,
}

/// Matches forecast points to the reference by valid time. The lead-0
/// analysis fix is not a forecast and is left out.
pub fn pair_tracks(forecast: &TCTrack, reference: Reference<'_>) -> MatchedSeries {
    let mut series = MatchedSeries::default();
    for p in forecast.points.iter().filter(|p| p.lead_hours > 0) {
        match reference.at(forecast.valid_time(p.lead_hours)) {
            Some(r) => series.pairs.push(MatchedPair { lead_hours: p.lead_hours, forecast: *p, reference: r }),
            None => series.unmatched += 1,
        }
    }
    series.pairs.sort_by_key(|p| p.lead_hours);
    series.pairs.dedup_by_key(|p| p.lead_hours);
    series
}

fn at_lead(collection: &[MatchedSeries], lead_hours: u32) -> impl Iterator<Item = &MatchedPair> {
    collection.iter().flat_map(|s| s.pairs.iter()).filter(move |p| p.lead_hours == lead_hours)
}

/// Sum of values after sorting, so that the result does not depend on the
/// order the series were collected in.
fn ordered_sum(mut v: Vec<f64>) -> (f64, usize) {
    v.sort_by(f64::total_cmp);
    (v.iter().sum(), v.len())
}

/// Mean great-circle distance (km) between forecast and reference centres.
pub fn track_mae(collection: &[MatchedSeries], lead_hours: u32) -> Option<f64> {
    let (sum, n) = ordered_sum(at_lead(collection, lead_hours).map(MatchedPair::distance_km).collect());
    (n > 0).then(|| sum / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntensityMetric {
    MslCenter,
    MaxWs10,
}

fn intensity_diffs(collection: &[MatchedSeries], lead_hours: u32, metric: IntensityMetric) -> Vec<f64> {
    at_lead(collection, lead_hours)
        .filter_map(|p| {
            let (f, r) = match metric {
                IntensityMetric::MslCenter => (p.forecast.msl_center, p.reference.msl_hpa?),
                IntensityMetric::MaxWs10 => (p.forecast.max_ws10, p.reference.max_ws10?),
            };
            let d = f - r;
            d.is_finite().then_some(d)
        })
        .collect()
}

/// Root-mean-square intensity error over pairs where both sides have a value.
pub fn intensity_rmse(collection: &[MatchedSeries], lead_hours: u32, metric: IntensityMetric) -> Option<f64> {
    let (sum, n) = ordered_sum(intensity_diffs(collection, lead_hours, metric).into_iter().map(|d| d * d).collect());
    (n > 0).then(|| libm::sqrt(sum / n as f64))
}

/// Mean absolute intensity error, for comparison with the RMSE.
pub fn intensity_mae(collection: &[MatchedSeries], lead_hours: u32, metric: IntensityMetric) -> Option<f64> {
    let (sum, n) = ordered_sum(intensity_diffs(collection, lead_hours, metric).into_iter().map(libm::fabs).collect());
    (n > 0).then(|| sum / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub lead_hours: u32,
    pub n_pairs: usize,
    pub track_mae_km: Option<f64>,
    pub rmse_msl_hpa: Option<f64>,
    pub rmse_ws10_ms: Option<f64>,
}

/// One row per lead time present in the collection.
pub fn summarize(collection: &[MatchedSeries]) -> Vec<EvalRow> {
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for p in collection.iter().flat_map(|s| s.pairs.iter()) {
        *counts.entry(p.lead_hours).or_default() += 1;
    }
    counts
        .into_iter()
        .map(|(lead, n)| EvalRow {
            lead_hours: lead,
            n_pairs: n,
            track_mae_km: track_mae(collection, lead),
            rmse_msl_hpa: intensity_rmse(collection, lead, IntensityMetric::MslCenter),
            rmse_ws10_ms: intensity_rmse(collection, lead, IntensityMetric::MaxWs10),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::track::{ObservedTrackPoint, StormNature, Termination};
    use alloc::string::ToString;
    use alloc::vec;
    use chrono::{Duration, NaiveDate};

    fn t0() -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2018, 10, 1).unwrap().and_hms_opt(0, 0, 0).unwrap()
    }

    fn point(lead: u32, lat: f64, lon: f64, msl: f64, ws: f64) -> TCPoint {
        TCPoint { lead_hours: lead, lat, lon, msl_center: msl, max_ws10: ws, vorticity_850: None, estimate: None }
    }

    fn forecast(last_lead: u32) -> TCTrack {
        TCTrack {
            sid: "S".into(),
            init_time: t0(),
            points: (0..=last_lead / 6).map(|i| point(6 * i, 15.0, 130.0 + i as f64, 960.0, 40.0)).collect(),
            termination: Termination::NoCandidate,
        }
    }

    fn observed(last_lead: u32, skip: Option<u32>) -> ObservedTrack {
        ObservedTrack {
            sid: "S".to_string(),
            name: None,
            points: (0..=last_lead / 6)
                .filter(|i| Some(6 * i) != skip)
                .map(|i| ObservedTrackPoint {
                    time: t0() + Duration::hours(6 * i as i64),
                    lat: 15.0,
                    lon: 130.0 + i as f64,
                    max_wind: Some(40.0),
                    min_pressure: Some(960.0),
                    nature: StormNature::Tropical,
                })
                .collect(),
            gaps: 0,
        }
    }

    #[test]
    fn pairing_examples() {
        let full = pair_tracks(&forecast(120), Reference::Observed(&observed(120, None)));
        assert_eq!(full.pairs.len(), 20);
        let short = pair_tracks(&forecast(48), Reference::Observed(&observed(120, None)));
        assert_eq!(short.pairs.len(), 8);
        let gap = pair_tracks(&forecast(120), Reference::Observed(&observed(120, Some(36))));
        assert!(gap.pairs.iter().all(|p| p.lead_hours != 36));
        assert_eq!(gap.unmatched, 1);
        let mut later = observed(120, None);
        for p in &mut later.points {
            p.time += Duration::days(30);
        }
        assert!(pair_tracks(&forecast(120), Reference::Observed(&later)).pairs.is_empty());
    }

    #[test]
    fn identical_tracks_score_zero() {
        let s = vec![pair_tracks(&forecast(24), Reference::Tracked(&forecast(24)))];
        for lead in [6, 12, 18, 24] {
            assert_eq!(track_mae(&s, lead), Some(0.0));
            assert_eq!(intensity_rmse(&s, lead, IntensityMetric::MslCenter), Some(0.0));
            assert_eq!(intensity_rmse(&s, lead, IntensityMetric::MaxWs10), Some(0.0));
        }
        assert_eq!(track_mae(&s, 30), None);
    }

    #[test]
    fn one_degree_offset_on_the_equator() {
        let pair = MatchedPair {
            lead_hours: 6,
            forecast: point(6, 0.0, 10.0, 1000.0, 10.0),
            reference: ReferencePoint { lat: 0.0, lon: 11.0, msl_hpa: Some(1000.0), max_ws10: Some(15.0) },
        };
        let s = vec![MatchedSeries { pairs: vec![pair], unmatched: 0 }];
        assert!((track_mae(&s, 6).unwrap() - 111.194_926_644_558_73).abs() < 1e-9);
        assert_eq!(intensity_rmse(&s, 6, IntensityMetric::MaxWs10), Some(5.0));
    }

    #[test]
    fn rms_of_one_two_two() {
        let pairs = [1.0, 2.0, 2.0]
            .iter()
            .map(|&d| MatchedPair {
                lead_hours: 12,
                forecast: point(12, 0.0, 0.0, 990.0 + d, 0.0),
                reference: ReferencePoint { lat: 0.0, lon: 0.0, msl_hpa: Some(990.0), max_ws10: None },
            })
            .collect();
        let s = vec![MatchedSeries { pairs, unmatched: 0 }];
        assert!((intensity_rmse(&s, 12, IntensityMetric::MslCenter).unwrap() - 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(intensity_rmse(&s, 12, IntensityMetric::MaxWs10), None);
        let rows = summarize(&s);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].n_pairs, 3);
    }
}
