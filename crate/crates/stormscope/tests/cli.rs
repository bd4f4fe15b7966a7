use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use stormscope::cli::{self, EXIT_DATA, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE};
use stormscope::fpk::{cube_from_pack, FieldPack};
use stormscope::ibtracs::parse_ibtracs_csv;
use stormscope::output::{tracks_from_json, write_scores_csv};
use stormscope::synth::VortexTruth;
use stormscope_core::climatology::build_climatology;
use stormscope_core::metrics::{score_series, ThresholdSpec};
use stormscope_core::tracker::TrackerConfig;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stormscope"))
}

fn stormscope(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name).display().to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn run_in(args: &[&str]) -> i32 {
    cli::run(std::iter::once("stormscope").chain(args.iter().copied()))
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(stormscope(&[]).status.code(), Some(EXIT_USAGE));
    let out = stormscope(&["verify", "--forecast", "a", "--truth", "b", "--variable", "T2M", "--metric", "bogus", "--out", "c"]);
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
    assert_eq!(run_in(&["--workers", "0", "fixtures", "validate", "--dir", "."]), EXIT_USAGE);
}

#[test]
fn missing_input_exits_3_naming_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = stormscope(&["climo", "build", "--input", "/no/such/history.fpk", "--variable", "T2M", "--out", s(&dir.path().join("c.fpk"))]);
    assert_eq!(out.status.code(), Some(EXIT_DATA));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such/history.fpk"));
}

#[test]
fn climo_build_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cube.fpk");
    let history = fixture("t2m_history.fpk");
    assert_eq!(run_in(&["climo", "build", "--input", &history, "--variable", "T2M", "--out", s(&out)]), EXIT_OK);
    let members = FieldPack::read_file(Path::new(&history)).unwrap().to_fieldsets().unwrap();
    let lib_cube = build_climatology(&members, "T2M".parse().unwrap(), &[90.0, 95.0, 98.0, 99.5]).unwrap();
    // empty month cells are NaN, so compare the encoded bytes
    assert_eq!(std::fs::read(&out).unwrap(), stormscope::fpk::cube_to_pack(&lib_cube).unwrap().to_bytes().unwrap());
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("cube.fpk.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["config"]["variable"], "T2M");
}

#[test]
fn constant_history_gives_constant_cube() {
    let dir = tempfile::tempdir().unwrap();
    let mut pack = FieldPack::read_file(Path::new(&fixture("t2m_history.fpk"))).unwrap();
    pack.data.iter_mut().for_each(|v| *v = 287.5);
    let input = dir.path().join("const.fpk");
    pack.write_file(&input).unwrap();
    let out = dir.path().join("cube.fpk");
    assert_eq!(run_in(&["climo", "build", "--input", s(&input), "--variable", "T2M", "--out", s(&out)]), EXIT_OK);
    let cube = cube_from_pack(&FieldPack::read_file(&out).unwrap()).unwrap();
    assert!(cube.thresholds().iter().filter(|v| !v.is_nan()).all(|&v| v == 287.5));
}

#[test]
fn verify_matches_library_and_perfect_forecast_scores_one() {
    let dir = tempfile::tempdir().unwrap();
    let history = fixture("t2m_history.fpk");
    let cube_path = dir.path().join("cube.fpk");
    assert_eq!(run_in(&["climo", "build", "--input", &history, "--variable", "T2M", "--out", s(&cube_path)]), EXIT_OK);
    let out = dir.path().join("scores.csv");
    let code = run_in(&[
        "verify", "--forecast", &history, "--truth", &history, "--variable", "T2M", "--metric", "csi", "--percentiles", "90,98", "--climo",
        s(&cube_path), "--out", s(&out),
    ]);
    assert_eq!(code, EXIT_OK);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("lead_hours,variable,threshold,tp,fp,fn,tn,csi,sedi\n"));
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    for r in reader.records() {
        assert_eq!(&r.unwrap()[7], "1");
    }
    let members = FieldPack::read_file(Path::new(&history)).unwrap().to_fieldsets().unwrap();
    let cube = cube_from_pack(&FieldPack::read_file(&cube_path).unwrap()).unwrap();
    let rows = score_series(&members, &members, "T2M".parse().unwrap(), &[ThresholdSpec::Percentile(90.0), ThresholdSpec::Percentile(98.0)], Some(&cube)).unwrap();
    let mut lib = Vec::new();
    write_scores_csv(&rows, &mut lib).unwrap();
    assert_eq!(text.as_bytes(), lib.as_slice());
}

#[test]
fn verify_reports_missing_truth() {
    let dir = tempfile::tempdir().unwrap();
    let history = fixture("t2m_history.fpk");
    let mut pack = FieldPack::read_file(Path::new(&history)).unwrap();
    let n = pack.grid.len();
    pack.times.truncate(3);
    pack.data.truncate(3 * n);
    let truth = dir.path().join("short.fpk");
    pack.write_file(&truth).unwrap();
    let out = stormscope(&["verify", "--forecast", &history, "--truth", s(&truth), "--variable", "T2M", "--metric", "rmse", "--out", s(&dir.path().join("r.csv"))]);
    assert_eq!(out.status.code(), Some(EXIT_DATA));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing truth"));
}

fn vortex_case(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let (pack, truth, best) = (dir.join("vortex.fpk"), dir.join("truth.json"), dir.join("best.csv"));
    let code = run_in(&[
        "synth", "vortex", "--nlon", "81", "--lat", "25", "--lon", "133", "--steer-u", "5", "--steer-v", "1.5", "--steps", "10", "--out", s(&pack),
        "--truth", s(&truth), "--best-track", s(&best),
    ]);
    assert_eq!(code, EXIT_OK);
    (pack, truth, best)
}

#[test]
fn synthetic_vortex_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let (pack, truth_path, best) = vortex_case(dir.path());
    let tracks = dir.path().join("tracks.json");
    let code = run_in(&["tc", "track", "--forecast", s(&pack), "--obs", s(&best), "--sid", "SYNTH", "--out", s(&tracks)]);
    assert_eq!(code, EXIT_OK);
    let truth: VortexTruth = serde_json::from_str(&std::fs::read_to_string(&truth_path).unwrap()).unwrap();
    let track = &tracks_from_json(&std::fs::read_to_string(&tracks).unwrap()).unwrap()[0];
    assert_eq!(track.points.len(), 11);
    assert_eq!(track.termination.as_str(), "end_of_forecast");
    for (p, c) in track.points.iter().zip(&truth.centers) {
        assert!((p.lat - c.lat).abs() <= truth.grid.lat_step + 1e-9, "{p:?} vs {c:?}");
        assert!((p.lon - c.lon).abs() <= truth.grid.lon_step + 1e-9, "{p:?} vs {c:?}");
    }

    // library path gives the same track
    let forecast = FieldPack::read_file(&pack).unwrap().to_fieldsets().unwrap();
    let parsed = parse_ibtracs_csv(&std::fs::read_to_string(&best).unwrap()).unwrap();
    let lib = cli::track_from_inputs(&forecast, &parsed, "SYNTH", None, None, &TrackerConfig::default()).unwrap();
    assert_eq!(stormscope::output::tracks_to_json(&[lib]).unwrap(), std::fs::read_to_string(&tracks).unwrap());

    let stats = dir.path().join("stats.csv");
    assert_eq!(run_in(&["tc", "eval", "--tracks", s(&tracks), "--reference", s(&best), "--out", s(&stats)]), EXIT_OK);
    let text = std::fs::read_to_string(&stats).unwrap();
    assert_eq!(text.lines().count(), 11);
    assert!(text.starts_with("lead_hours,n_pairs,track_mae_km,rmse_msl_hpa,rmse_ws10_ms\n6,1,"));

    let missing = stormscope(&["tc", "track", "--forecast", s(&pack), "--obs", s(&best), "--sid", "NOPE", "--out", s(&tracks)]);
    assert_eq!(missing.status.code(), Some(EXIT_DATA));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("NOPE"));
}

#[test]
fn high_terrain_via_cli() {
    let dir = tempfile::tempdir().unwrap();
    let (pack, _, best) = vortex_case(dir.path());
    let statics = dir.path().join("statics.fpk");
    assert_eq!(run_in(&["synth", "plateau", "--nlon", "81", "--lat", "26.5", "--lon", "138", "--radius-km", "200", "--out", s(&statics)]), EXIT_OK);
    let tracks = dir.path().join("tracks.json");
    let code = run_in(&[
        "tc", "track", "--forecast", s(&pack), "--obs", s(&best), "--sid", "SYNTH", "--orography", s(&statics), "--mask", s(&statics), "--out",
        s(&tracks),
    ]);
    assert_eq!(code, EXIT_OK);
    let track = &tracks_from_json(&std::fs::read_to_string(&tracks).unwrap()).unwrap()[0];
    assert_eq!(track.termination.as_str(), "high_terrain");
    assert!(track.points.len() < 11);
}

#[test]
fn eval_against_best_track_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let best = parse_ibtracs_csv(&std::fs::read_to_string(fixture("best_track.csv")).unwrap()).unwrap();
    let obs = best.track("2018183N08155").unwrap();
    // a forecast track copied from the observations, shifted 0.5 degrees east
    let init = obs.points[4].time;
    let points: Vec<serde_json::Value> = obs.points[4..25]
        .iter()
        .map(|p| serde_json::json!({"lead_h": (p.time - init).num_hours(), "lat": p.lat, "lon": p.lon + 0.5, "msl_hpa": p.min_pressure, "max_ws10_ms": p.max_wind}))
        .collect();
    let track = serde_json::json!([{"sid": "2018183N08155", "init_time": init.format("%Y-%m-%dT%H:%M:%SZ").to_string(), "termination": "end_of_forecast", "points": points}]);
    let tracks = dir.path().join("t.json");
    std::fs::write(&tracks, track.to_string()).unwrap();
    let out = dir.path().join("eval.csv");
    assert_eq!(run_in(&["tc", "eval", "--tracks", s(&tracks), "--reference", &fixture("best_track.csv"), "--out", s(&out)]), EXIT_OK);
    let mut reader = csv::Reader::from_path(&out).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 20);
    for r in &rows {
        let mae: f64 = r[2].parse().unwrap();
        assert!(mae > 40.0 && mae < 60.0, "{mae}");
        if !r[3].is_empty() {
            assert_eq!(&r[3], "0");
        }
        assert_eq!(&r[4], "0");
    }

    // a storm id missing from the reference
    let other = track.to_string().replace("2018183N08155", "XXXX");
    std::fs::write(&tracks, other).unwrap();
    assert_eq!(run_in(&["tc", "eval", "--tracks", s(&tracks), "--reference", &fixture("best_track.csv"), "--out", s(&out)]), EXIT_DATA);

    // no matching times gives only the header
    let empty = serde_json::json!([{"sid": "2018183N08155", "init_time": "2017-01-01T00:00:00Z", "termination": "no_candidate", "points": []}]);
    std::fs::write(&tracks, empty.to_string()).unwrap();
    assert_eq!(run_in(&["tc", "eval", "--tracks", s(&tracks), "--reference", &fixture("best_track.csv"), "--out", s(&out)]), EXIT_OK);
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "lead_hours,n_pairs,track_mae_km,rmse_msl_hpa,rmse_ws10_ms\n");
}

#[test]
fn gradcheck_exit_codes() {
    assert_eq!(run_in(&["ddpm", "gradcheck", "--n-params", "100"]), EXIT_OK);
    // a step this large breaks the check
    assert_eq!(run_in(&["ddpm", "gradcheck", "--n-params", "100", "--step", "3"]), EXIT_NUMERIC);
}

const TOY_CONFIG: &str = "[model]\nwidth = 8\nblocks = 1\nembed_dim = 8\nwrap_rows = true\n\n\
[schedule]\nkind = \"respaced\"\nsteps = 20\n\n\
[train]\niterations = 1500\nbatch_size = 4\nseed = 1\nlr = 3e-3\nweight_decay = 0.0\n";

#[test]
fn train_then_sample_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("pairs.fpk");
    assert_eq!(run_in(&["synth", "refine-pairs", "--n", "1", "--size", "8", "--seed", "4", "--out", s(&data)]), EXIT_OK);
    let config = dir.path().join("train.toml");
    std::fs::write(&config, TOY_CONFIG).unwrap();
    let model = dir.path().join("model.fpk");
    let losses = dir.path().join("loss.csv");
    assert_eq!(run_in(&["ddpm", "train", "--data", s(&data), "--config", s(&config), "--out", s(&model), "--loss-csv", s(&losses)]), EXIT_OK);

    let mut reader = csv::Reader::from_path(&losses).unwrap();
    let l: Vec<f64> = reader.records().map(|r| r.unwrap()[1].parse().unwrap()).collect();
    assert_eq!(l.len(), 1500);
    let head: f64 = l[..50].iter().sum::<f64>() / 50.0;
    let tail: f64 = l[l.len() - 50..].iter().sum::<f64>() / 50.0;
    assert!(tail * 10.0 < head, "loss {head} -> {tail}");

    let a = dir.path().join("a.fpk");
    let b = dir.path().join("b.fpk");
    for (out, workers) in [(&a, "1"), (&b, "3")] {
        let code = run_in(&["--workers", workers, "ddpm", "sample", "--params", s(&model), "--condition", s(&data), "--lead-step", "2", "--seed", "9", "--out", s(out)]);
        assert_eq!(code, EXIT_OK);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let saved = stormscope::ddpm_io::model_from_pack(&FieldPack::read_file(&model).unwrap()).unwrap();
    let conditions = stormscope::ddpm_io::conditions_from_pack(&FieldPack::read_file(&data).unwrap()).unwrap();
    let lib = cli::sample_conditions(&saved, &conditions, 2, 9).unwrap();
    let mut lib_pack = FieldPack::from_fieldsets(&lib).unwrap();
    lib_pack.attrs.insert("kind".into(), "refined".into());
    assert_eq!(lib_pack.to_bytes().unwrap(), std::fs::read(&a).unwrap());

    assert_eq!(run_in(&["ddpm", "gradcheck", "--params", s(&model), "--data", s(&data), "--n-params", "100"]), EXIT_OK);
}

#[test]
fn diverging_training_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("pairs.fpk");
    assert_eq!(run_in(&["synth", "refine-pairs", "--n", "2", "--size", "6", "--out", s(&data)]), EXIT_OK);
    let config = dir.path().join("train.toml");
    std::fs::write(&config, "[model]\nwidth = 4\nblocks = 1\nembed_dim = 4\n[schedule]\nkind = \"respaced\"\nsteps = 10\n[train]\niterations = 50\nlr = 1e200\n").unwrap();
    let out = dir.path().join("m.fpk");
    assert_eq!(run_in(&["ddpm", "train", "--data", s(&data), "--config", s(&config), "--out", s(&out)]), EXIT_NUMERIC);
    std::fs::write(&config, "[train]\nlearning_rate = 1\n").unwrap();
    assert_eq!(run_in(&["ddpm", "train", "--data", s(&data), "--config", s(&config), "--out", s(&out)]), EXIT_DATA);
}

#[test]
fn fixtures_validate_command() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    assert_eq!(run_in(&["fixtures", "validate", "--dir", s(&dir)]), EXIT_OK);
}
