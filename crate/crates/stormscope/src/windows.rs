//! Storm forecast windows: storm name, initialisation and end time.
//!
//! Times are written as in a bulletin, `1200 UTC 04 Jul 2018`. A blank storm
//! name repeats the name of the row above.

use chrono::NaiveDateTime;
use stormscope_core::track::ObservedTrack;

use crate::error::{IoError, Result};
use crate::ibtracs::IbtracsParse;

const FORMAT: &str = "%H%M UTC %d %b %Y";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StormWindow {
    pub name: String,
    pub init: NaiveDateTime,
    pub end: NaiveDateTime,
}

pub fn parse_time(s: &str) -> Result<NaiveDateTime> {
    NaiveDateTime::parse_from_str(s.trim(), FORMAT)
        .or_else(|_| NaiveDateTime::parse_from_str(s.trim(), "%Y-%m-%d %H:%M:%S"))
        .map_err(|e| IoError::Data(format!("time {s:?}: {e}")))
}

pub fn parse_windows_csv(text: &str) -> Result<Vec<StormWindow>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| IoError::MissingColumn(name.into()));
    let (name_c, init_c, end_c) = (col("name")?, col("init")?, col("end")?);
    let mut out: Vec<StormWindow> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = i + 2;
        let name = match record.get(name_c).unwrap_or("") {
            "" => out.last().map(|w| w.name.clone()).ok_or_else(|| IoError::Data(format!("line {line}: first row has no storm name")))?,
            n => n.to_string(),
        };
        let init = parse_time(record.get(init_c).unwrap_or("")).map_err(|e| IoError::Data(format!("line {line}: {e}")))?;
        let end = parse_time(record.get(end_c).unwrap_or("")).map_err(|e| IoError::Data(format!("line {line}: {e}")))?;
        if end <= init {
            return Err(IoError::Data(format!("line {line}: end {end} is not after init {init}")));
        }
        out.push(StormWindow { name, init, end });
    }
    Ok(out)
}

/// A window together with the best track of its storm.
#[derive(Debug, Clone)]
pub struct ResolvedWindow<'a> {
    pub window: &'a StormWindow,
    pub track: &'a ObservedTrack,
}

/// Finds the best track of each window's storm: the track with that name that
/// has an observation at the initialisation time.
pub fn resolve_windows<'a>(windows: &'a [StormWindow], best: &'a IbtracsParse) -> Result<Vec<ResolvedWindow<'a>>> {
    windows
        .iter()
        .map(|w| {
            best.by_name(&w.name)
                .into_iter()
                .find(|t| t.point_at(w.init).is_some())
                .map(|track| ResolvedWindow { window: w, track })
                .ok_or_else(|| IoError::Data(format!("no best track for {} at {}", w.name, w.init)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bulletin_times_and_blank_names() {
        let w = parse_windows_csv("name,init,end\nMaria,1200 UTC 04 Jul 2018,1200 UTC 09 Jul 2018\n,0000 UTC 05 Jul 2018,0000 UTC 10 Jul 2018\n").unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(w[1].name, "Maria");
        assert_eq!(w[1].init.to_string(), "2018-07-05 00:00:00");
    }

    #[test]
    fn rejects_reversed_window() {
        assert!(parse_windows_csv("name,init,end\nX,1200 UTC 04 Jul 2018,0000 UTC 04 Jul 2018\n").is_err());
    }
}
