//! Checked-in fixture catalog: digests, validation and regeneration of the
//! generated fixtures.

use std::fmt::Write as _;
use std::path::Path;

use chrono::{Duration, NaiveDate, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use stormscope_core::synth::gaussian_random_field;
use stormscope_core::{FieldSet, GridSpec};

use crate::error::{IoError, Result};
use crate::fpk::FieldPack;
use crate::manifest::sha256_hex;

pub const CATALOG: &str = "catalog.json";
pub const BEST_TRACK_SEED: u64 = 2018;
pub const HISTORY_SEED: u64 = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureEntry {
    pub name: String,
    /// Relative to the catalog directory.
    pub path: String,
    pub sha256: String,
    pub description: String,
    pub provenance: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureCatalog {
    pub fixtures: Vec<FixtureEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureProblem {
    pub name: String,
    pub problem: String,
}

impl FixtureCatalog {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(CATALOG);
        let text = std::fs::read_to_string(&path).map_err(|source| IoError::File { path, source })?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn get(&self, name: &str) -> Option<&FixtureEntry> {
        self.fixtures.iter().find(|f| f.name == name)
    }
}

/// Empty when every fixture exists with its recorded digest and every
/// generated fixture still regenerates to the same bytes.
pub fn validate_fixtures(dir: &Path, catalog: &FixtureCatalog) -> Vec<FixtureProblem> {
    let mut problems = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for f in &catalog.fixtures {
        let mut report = |problem: String| problems.push(FixtureProblem { name: f.name.clone(), problem });
        if !seen.insert(f.name.as_str()) {
            report("listed twice".into());
            continue;
        }
        let bytes = match std::fs::read(dir.join(&f.path)) {
            Ok(b) => b,
            Err(e) => {
                report(format!("cannot read {}: {e}", f.path));
                continue;
            }
        };
        let digest = sha256_hex(&bytes);
        if digest != f.sha256 {
            report(format!("digest {digest} does not match catalog {}", f.sha256));
        }
        match regenerate(&f.name) {
            Some(Ok(fresh)) if fresh != bytes => report("differs from its regenerated bytes".into()),
            Some(Err(e)) => report(format!("regeneration failed: {e}")),
            _ => {}
        }
    }
    problems
}

/// Bytes of a generated fixture, `None` for hand-written ones.
pub fn regenerate(name: &str) -> Option<Result<Vec<u8>>> {
    match name {
        "best_track" => Some(Ok(synthetic_best_track_csv(BEST_TRACK_SEED).into_bytes())),
        "t2m_history" => Some(t2m_history_pack(HISTORY_SEED).and_then(|p| p.to_bytes())),
        _ => None,
    }
}

fn at(y: i32, m: u32, d: u32, h: u32) -> NaiveDateTime {
    NaiveDate::from_ymd_opt(y, m, d).and_then(|x| x.and_hms_opt(h, 0, 0)).expect("valid fixture date")
}

struct StormPlan {
    sid: &'static str,
    name: &'static str,
    start: NaiveDateTime,
    end: NaiveDateTime,
    lat: f64,
    lon: f64,
}

const STORM_COUNT: usize = 5;

fn plans() -> [StormPlan; STORM_COUNT] {
    [
        StormPlan { sid: "2018183N08155", name: "MARIA", start: at(2018, 7, 3, 12), end: at(2018, 7, 11, 12), lat: 9.0, lon: 154.0 },
        StormPlan { sid: "2018226N17130", name: "RUMBIA", start: at(2018, 8, 14, 12), end: at(2018, 8, 20, 12), lat: 27.0, lon: 131.0 },
        StormPlan { sid: "2018250N12170", name: "MANGKHUT", start: at(2018, 9, 6, 12), end: at(2018, 9, 14, 0), lat: 13.0, lon: 160.0 },
        StormPlan { sid: "2018271N06154", name: "KONG-REY", start: at(2018, 9, 28, 12), end: at(2018, 10, 8, 12), lat: 7.0, lon: 153.0 },
        StormPlan { sid: "2018293N06164", name: "YUTU", start: at(2018, 10, 21, 0), end: at(2018, 10, 31, 0), lat: 7.0, lon: 163.0 },
    ]
}

/// Best-track CSV in the IBTrACS layout for five synthetic storms covering
/// the forecast windows. Each storm also carries one off-synoptic fix, and
/// the last day is extratropical.
pub fn synthetic_best_track_csv(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::from("SID,SEASON,BASIN,NAME,ISO_TIME,NATURE,LAT,LON,WMO_WIND,WMO_PRES,USA_WIND,USA_PRES\n");
    out.push_str(" ,Year, , , , ,degrees_north,degrees_east,kts,mb,kts,mb\n");
    for plan in plans() {
        let steps = ((plan.end - plan.start).num_hours() / 6) as usize;
        let (mut lat, mut lon) = (plan.lat, plan.lon);
        for i in 0..=steps {
            let time = plan.start + Duration::hours(6 * i as i64);
            let frac = i as f64 / steps as f64;
            // intensify, peak at 40 %, then weaken
            let shape = if frac < 0.4 { frac / 0.4 } else { 1.0 - (frac - 0.4) / 0.6 * 0.7 };
            let wind = (25.0 + 120.0 * shape + rng.gen_range(-3.0..3.0)).round();
            let pres = (1008.0 - 100.0 * shape + rng.gen_range(-2.0..2.0)).round();
            let nature = if time > plan.end - Duration::hours(24) { "ET" } else { "TS" };
            let wmo_pres = if i % 7 == 3 { String::new() } else { format!("{pres}") };
            let _ = writeln!(
                out,
                "{},2018,WP,{},{},{nature},{lat:.2},{lon:.2},{wind},{wmo_pres},{},{}",
                plan.sid,
                plan.name,
                time.format("%Y-%m-%d %H:%M:%S"),
                wind + 5.0,
                pres - 3.0
            );
            if i == 2 {
                let off = time + Duration::hours(3);
                let _ = writeln!(out, "{},2018,WP,{},{},TS,{lat:.2},{lon:.2},,,,", plan.sid, plan.name, off.format("%Y-%m-%d %H:%M:%S"));
            }
            // west-north-west drift that recurves late in life
            let turn = (frac - 0.6).max(0.0) * 2.5;
            lat += 0.35 + 0.5 * turn + rng.gen_range(-0.05..0.05);
            lon += -0.6 + 1.2 * turn + rng.gen_range(-0.05..0.05);
        }
    }
    out
}

/// Two years of 6-hourly 2 m temperature on an 8x8 grid for July, with a
/// seasonal offset and random spatial anomalies.
pub fn t2m_history_pack(seed: u64) -> Result<FieldPack> {
    let grid = GridSpec::new(8, 8, 20.0, 2.0, 120.0, 2.0)?;
    let mut members = Vec::new();
    let mut i = 0u64;
    for year in [2016, 2017] {
        let mut t = at(year, 7, 1, 0);
        while t < at(year, 8, 1, 0) {
            let anomaly = gaussian_random_field(&grid, 600.0, seed.wrapping_mul(1_000_003).wrapping_add(i))?;
            let field = anomaly.map(|v| 300.0 + 3.0 * v)?.with_variable("T2M".parse()?, "K")?;
            members.push(FieldSet::with_fields(t, 0, [field])?);
            t += Duration::hours(6);
            i += 1;
        }
    }
    let mut pack = FieldPack::from_fieldsets(&members)?;
    pack.attrs.insert("kind".into(), "history".into());
    Ok(pack)
}
