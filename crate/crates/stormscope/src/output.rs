//! CSV and JSON result tables.
//!
//! Numbers are written in Rust's shortest round-trip form so that a table
//! read back gives the exact values computed. Undefined scores are empty
//! cells in CSV and `null` in JSON.

use std::io::Write;

use serde::{Deserialize, Serialize};
use stormscope_core::metrics::{ContinuousRow, ScoreRow};
use stormscope_core::tceval::EvalRow;
use stormscope_core::track::{TCPoint, TCTrack, Termination};

use crate::error::{IoError, Result};

pub const SCORE_HEADER: [&str; 9] = ["lead_hours", "variable", "threshold", "tp", "fp", "fn", "tn", "csi", "sedi"];
pub const EVAL_HEADER: [&str; 5] = ["lead_hours", "n_pairs", "track_mae_km", "rmse_msl_hpa", "rmse_ws10_ms"];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_scores_csv(rows: &[ScoreRow], sink: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(SCORE_HEADER)?;
    for r in rows {
        w.write_record([
            r.lead_hours.to_string(),
            r.variable.to_string(),
            r.threshold.clone(),
            r.table.tp.to_string(),
            r.table.fp.to_string(),
            r.table.fn_.to_string(),
            r.table.tn.to_string(),
            opt(r.csi),
            opt(r.sedi),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `lead_hours, variable, cases, <metric>`
pub fn write_continuous_csv(rows: &[ContinuousRow], metric: &str, sink: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["lead_hours", "variable", "cases", metric])?;
    for r in rows {
        w.write_record([r.lead_hours.to_string(), r.variable.to_string(), r.cases.to_string(), opt(r.value)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_eval_csv(rows: &[EvalRow], sink: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(EVAL_HEADER)?;
    for r in rows {
        w.write_record([r.lead_hours.to_string(), r.n_pairs.to_string(), opt(r.track_mae_km), opt(r.rmse_msl_hpa), opt(r.rmse_ws10_ms)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_loss_csv(losses: &[f64], sink: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["iteration", "loss"])?;
    for (i, l) in losses.iter().enumerate() {
        w.write_record([(i + 1).to_string(), l.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackPointJson {
    pub lead_h: u32,
    pub lat: f64,
    pub lon: f64,
    pub msl_hpa: Option<f64>,
    pub max_ws10_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackJson {
    pub sid: String,
    pub init_time: String,
    pub termination: String,
    pub points: Vec<TrackPointJson>,
}

impl From<&TCTrack> for TrackJson {
    fn from(t: &TCTrack) -> Self {
        Self {
            sid: t.sid.clone(),
            init_time: t.init_time.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
            termination: t.termination.as_str().into(),
            points: t
                .points
                .iter()
                .map(|p| TrackPointJson {
                    lead_h: p.lead_hours,
                    lat: p.lat,
                    lon: p.lon,
                    msl_hpa: Some(p.msl_center).filter(|v| v.is_finite()),
                    max_ws10_ms: Some(p.max_ws10).filter(|v| v.is_finite()),
                })
                .collect(),
        }
    }
}

impl TrackJson {
    pub fn to_track(&self) -> Result<TCTrack> {
        let init_time = chrono::NaiveDateTime::parse_from_str(self.init_time.trim_end_matches('Z'), "%Y-%m-%dT%H:%M:%S")
            .map_err(|e| IoError::Data(format!("track {}: init_time {:?}: {e}", self.sid, self.init_time)))?;
        let termination = match self.termination.as_str() {
            "end_of_forecast" => Termination::EndOfForecast,
            "no_candidate" => Termination::NoCandidate,
            "high_terrain" => Termination::HighTerrain,
            other => return Err(IoError::Data(format!("track {}: unknown termination {other:?}", self.sid))),
        };
        let points = self
            .points
            .iter()
            .map(|p| TCPoint {
                lead_hours: p.lead_h,
                lat: p.lat,
                lon: p.lon,
                msl_center: p.msl_hpa.unwrap_or(f64::NAN),
                max_ws10: p.max_ws10_ms.unwrap_or(f64::NAN),
                vorticity_850: None,
                estimate: None,
            })
            .collect();
        Ok(TCTrack { sid: self.sid.clone(), init_time, points, termination })
    }
}

pub fn tracks_from_json(text: &str) -> Result<Vec<TCTrack>> {
    let list: Vec<TrackJson> = serde_json::from_str(text)?;
    list.iter().map(TrackJson::to_track).collect()
}

pub fn tracks_to_json(tracks: &[TCTrack]) -> Result<String> {
    let list: Vec<TrackJson> = tracks.iter().map(TrackJson::from).collect();
    Ok(serde_json::to_string_pretty(&list)? + "\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_eval_has_header() {
        let mut out = Vec::new();
        write_eval_csv(&[], &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "lead_hours,n_pairs,track_mae_km,rmse_msl_hpa,rmse_ws10_ms\n");
    }
}
