//! Cyclone XML (CXML) track exchange files. Only `<data type="forecast">`
//! elements are read; ensemble members and analyses are ignored.

use chrono::{DateTime, NaiveDateTime};
use roxmltree::{Document, Node};
use stormscope_core::grid::normalize_lon;
use stormscope_core::track::{ForecastTrack, ForecastTrackPoint};

use crate::error::{IoError, Result};
use crate::ibtracs::KNOT_MS;

pub const FORECAST_TAG: &str = "forecast";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TiggeParse {
    pub tracks: Vec<ForecastTrack>,
    /// Fixes dropped for a missing or unreadable position or time.
    pub skipped_points: usize,
}

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|c| c.has_tag_name(name))
}

fn descendant<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.descendants().find(|c| c.has_tag_name(name))
}

fn text_f64(node: Option<Node>) -> Option<f64> {
    node?.text()?.trim().parse().ok().filter(|v: &f64| v.is_finite())
}

fn parse_time(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.naive_utc())
        .ok()
        .or_else(|| NaiveDateTime::parse_from_str(s.trim_end_matches('Z'), "%Y-%m-%dT%H:%M:%S").ok())
}

fn coordinate(node: Option<Node>, positive: char, negative: char) -> Option<f64> {
    let node = node?;
    let v = text_f64(Some(node))?;
    let units = node.attribute("units").unwrap_or("").trim();
    match units.chars().last() {
        Some(c) if c == negative => Some(-v),
        Some(c) if c == positive => Some(v),
        None => Some(v),
        Some(_) if units.is_empty() => Some(v),
        Some(_) => None,
    }
}

fn speed_ms(node: Option<Node>) -> Option<f64> {
    let node = node?;
    let v = text_f64(Some(node))?;
    match node.attribute("units").map(str::trim) {
        Some("kt") | Some("knots") | Some("kts") => Some(v * KNOT_MS),
        Some("m/s") | Some("m s-1") | Some("ms-1") | None => Some(v),
        Some(_) => None,
    }
}

fn fix_point(fix: Node) -> Option<ForecastTrackPoint> {
    let time = parse_time(child(fix, "validTime")?.text()?)?;
    let lat = coordinate(descendant(fix, "latitude"), 'N', 'S')?;
    let lon = coordinate(descendant(fix, "longitude"), 'E', 'W')?;
    if !(-90.0..=90.0).contains(&lat) {
        return None;
    }
    Some(ForecastTrackPoint {
        time,
        lat,
        lon: normalize_lon(lon),
        pressure: text_f64(descendant(fix, "pressure")),
        max_wind: speed_ms(descendant(fix, "speed")),
    })
}

pub fn parse_tigge_xml(text: &str) -> Result<TiggeParse> {
    let doc = Document::parse(text).map_err(|e| IoError::Xml { position: e.pos().to_string(), detail: e.to_string() })?;
    let base_time = descendant(doc.root_element(), "baseTime").and_then(|n| n.text()).and_then(parse_time);
    let mut out = TiggeParse::default();
    for data in doc.root_element().children().filter(|n| n.has_tag_name("data")) {
        if data.attribute("type") != Some(FORECAST_TAG) {
            continue;
        }
        let data_base = descendant(data, "baseTime").and_then(|n| n.text()).and_then(parse_time).or(base_time);
        for dist in data.children().filter(|n| n.has_tag_name("disturbance")) {
            let mut points = Vec::new();
            for fix in dist.children().filter(|n| n.has_tag_name("fix")) {
                match fix_point(fix) {
                    Some(p) => points.push(p),
                    None => out.skipped_points += 1,
                }
            }
            points.sort_by_key(|p| p.time);
            out.tracks.push(ForecastTrack {
                id: dist.attribute("ID").unwrap_or("").to_string(),
                name: child(dist, "cycloneName").and_then(|n| n.text()).map(|s| s.trim().to_string()),
                base_time: data_base,
                points,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fix(hour: u32, lat: &str, lon: &str) -> String {
        format!(
            "<fix hour=\"{hour}\"><validTime>2018-07-04T{hour:02}:00:00Z</validTime><latitude units=\"deg N\">{lat}</latitude>\
             <longitude units=\"deg W\">{lon}</longitude><cycloneData><minimumPressure><pressure units=\"hPa\">990</pressure></minimumPressure>\
             <maximumWind><speed units=\"kt\">100</speed></maximumWind></cycloneData></fix>"
        )
    }

    #[test]
    fn forecast_only() {
        let xml = format!(
            "<cxml><data type=\"forecast\"><disturbance ID=\"a\">{}{}{}</disturbance></data>\
             <data type=\"ensembleForecast\" member=\"1\"><disturbance ID=\"b\">{}</disturbance></data></cxml>",
            fix(0, "10", "40"),
            fix(6, "11", "41"),
            fix(12, "12", "42"),
            fix(0, "10", "40")
        );
        let p = parse_tigge_xml(&xml).unwrap();
        assert_eq!(p.tracks.len(), 1);
        let pts = &p.tracks[0].points;
        assert_eq!(pts.len(), 3);
        assert_eq!(pts[0].lon, 320.0);
        assert!((pts[0].max_wind.unwrap() - 51.4444).abs() < 1e-12);
        assert_eq!(pts[0].pressure, Some(990.0));
    }

    #[test]
    fn ensemble_only_is_empty() {
        let xml = format!("<cxml><data type=\"ensembleForecast\"><disturbance ID=\"b\">{}</disturbance></data></cxml>", fix(0, "1", "1"));
        assert!(parse_tigge_xml(&xml).unwrap().tracks.is_empty());
    }

    #[test]
    fn missing_coordinate_skipped() {
        let xml = "<cxml><data type=\"forecast\"><disturbance ID=\"a\"><fix><validTime>2018-07-04T00:00:00Z</validTime>\
                   <latitude units=\"deg N\">10</latitude></fix></disturbance></data></cxml>";
        let p = parse_tigge_xml(xml).unwrap();
        assert_eq!(p.skipped_points, 1);
        assert!(p.tracks[0].points.is_empty());
    }

    #[test]
    fn malformed_reports_position() {
        let err = parse_tigge_xml("<cxml><data></cxml>").unwrap_err();
        assert!(err.to_string().starts_with("xml at 1:"), "{err}");
    }
}
