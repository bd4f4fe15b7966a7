//! Command-line pipelines. [`run`] is what the binary calls; it returns the
//! process exit code.

mod args;

use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use chrono::NaiveDateTime;
use clap::Parser;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;
use stormscope_core::climatology::build_climatology;
use stormscope_core::ddpm::{grad_check, sample, train, Denoise, Denoiser, DenoiserConfig, DiffusionSchedule, RefineSample};
use stormscope_core::metrics::{continuous_series, score_series, ContinuousMetric, ThresholdSpec};
use stormscope_core::synth::{plateau_statics, VortexSpec};
use stormscope_core::tceval::{pair_tracks, summarize, Reference};
use stormscope_core::track::{StormNature, TCTrack};
use stormscope_core::tracker::{track_tc, StaticFields, TrackRequest, TrackerConfig};
use stormscope_core::{FieldSet, GridSpec, LatLon, VariableId};

pub use args::*;

use crate::config::{parse_tracker, parse_training, TrainingFile};
use crate::ddpm_io::{conditions_from_pack, encode_pairs, model_from_pack, model_to_pack, pairs_from_pack, pairs_to_pack, SavedModel};
use crate::error::IoError;
use crate::fixtures::{validate_fixtures, FixtureCatalog};
use crate::fpk::{cube_from_pack, cube_to_pack, statics_to_pack, FieldPack};
use crate::ibtracs::{parse_ibtracs_csv_with, IbtracsParse, IntensityColumns};
use crate::manifest::Manifest;
use crate::output::{tracks_from_json, tracks_to_json, write_continuous_csv, write_eval_csv, write_loss_csv, write_scores_csv};
use crate::synth::{vortex_case, ToyRefineSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] IoError),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl From<stormscope_core::Error> for CliError {
    fn from(e: stormscope_core::Error) -> Self {
        CliError::Data(e.into())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

/// Parses `args` (program name first), runs the command and returns the exit
/// code. Diagnostics go to stderr, summaries to stdout.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> CliResult {
    if cli.workers == 0 {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} workers: {e}", cli.workers)))?;
    pool.install(|| match &cli.command {
        Command::Climo(ClimoCommand::Build(a)) => climo_build(a),
        Command::Verify(a) => verify(a),
        Command::Tc(TcCommand::Track(a)) => tc_track(a),
        Command::Tc(TcCommand::Eval(a)) => tc_eval(a),
        Command::Ddpm(DdpmCommand::Train(a)) => ddpm_train(a),
        Command::Ddpm(DdpmCommand::Sample(a)) => ddpm_sample(a),
        Command::Ddpm(DdpmCommand::Gradcheck(a)) => ddpm_gradcheck(a),
        Command::Synth(SynthCommand::Vortex(a)) => synth_vortex(a),
        Command::Synth(SynthCommand::RefinePairs(a)) => synth_refine(a),
        Command::Synth(SynthCommand::Plateau(a)) => synth_plateau(a),
        Command::Fixtures(FixturesCommand::Validate(a)) => fixtures_validate(a),
        Command::Fixtures(FixturesCommand::Regenerate(a)) => fixtures_regenerate(a),
    })
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|source| IoError::File { path: path.to_path_buf(), source }.into())
}

fn write_text(path: &Path, text: &str) -> CliResult {
    std::fs::write(path, text).map_err(|source| IoError::File { path: path.to_path_buf(), source }.into())
}

fn read_text(path: &Path) -> CliResult<String> {
    Ok(crate::gz::read_text(path)?)
}

fn read_pack(path: &Path) -> CliResult<FieldPack> {
    Ok(FieldPack::read_file(path)?)
}

fn finish(mut manifest: Manifest, inputs: &[&Path], outputs: &[&Path]) -> CliResult {
    for p in inputs {
        manifest.input(p)?;
    }
    for p in outputs {
        manifest.output(p)?;
    }
    let first = outputs.first().ok_or_else(|| CliError::Usage("no output".into()))?;
    manifest.write(&Manifest::path_for(first))?;
    Ok(())
}

fn parse_variable(s: &str) -> CliResult<VariableId> {
    s.parse().map_err(|e: stormscope_core::Error| CliError::Usage(e.to_string()))
}

/// `2018-07-04T12:00:00`, `2018-07-04 12:00` or `1200 UTC 04 Jul 2018`.
pub fn parse_time(s: &str) -> CliResult<NaiveDateTime> {
    let s = s.trim();
    let t = s.trim_end_matches('Z');
    ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(t, f).ok())
        .or_else(|| crate::windows::parse_time(s).ok())
        .ok_or_else(|| CliError::Usage(format!("unrecognised time {s:?}")))
}

/// Field sets of every pack, in argument order, read in parallel.
fn read_fieldsets(paths: &[std::path::PathBuf]) -> CliResult<Vec<FieldSet>> {
    let parts: Vec<CliResult<Vec<FieldSet>>> = paths.par_iter().map(|p| Ok(read_pack(p)?.to_fieldsets()?)).collect();
    let mut out = Vec::new();
    for part in parts {
        out.extend(part?);
    }
    Ok(out)
}

fn climo_build(a: &ClimoBuildArgs) -> CliResult {
    let variable = parse_variable(&a.variable)?;
    let history = read_fieldsets(&a.input)?;
    let cube = build_climatology(&history, variable, &a.percentiles)?;
    cube_to_pack(&cube)?.write_file(&a.out)?;
    let manifest = Manifest::new("climo build", json!({ "variable": variable, "percentiles": a.percentiles }))?;
    let inputs: Vec<&Path> = a.input.iter().map(|p| p.as_path()).collect();
    finish(manifest, &inputs, &[&a.out])?;
    println!("climatology of {variable} from {} members -> {}", history.len(), a.out.display());
    Ok(())
}

fn verify(a: &VerifyArgs) -> CliResult {
    let variable = parse_variable(&a.variable)?;
    let forecasts = read_pack(&a.forecast)?.to_fieldsets()?;
    let truths = read_pack(&a.truth)?.to_fieldsets()?;
    let cube = match &a.climo {
        Some(p) => {
            let cube = cube_from_pack(&read_pack(p)?)?;
            if cube.variable() != variable {
                return Err(CliError::Usage(format!("climatology is for {}, not {variable}", cube.variable())));
            }
            Some(cube)
        }
        None => None,
    };
    let mut inputs: Vec<&Path> = vec![&a.forecast, &a.truth];
    if let Some(p) = &a.climo {
        inputs.push(p);
    }
    match a.metric {
        Metric::Csi | Metric::Sedi => {
            let specs: Vec<ThresholdSpec> = if !a.thresholds.is_empty() {
                a.thresholds.iter().map(|&v| ThresholdSpec::Absolute(v)).collect()
            } else if !a.percentiles.is_empty() {
                a.percentiles.iter().map(|&p| ThresholdSpec::Percentile(p)).collect()
            } else {
                ThresholdSpec::defaults_for(variable)
            };
            if specs.iter().any(|s| matches!(s, ThresholdSpec::Percentile(_))) && cube.is_none() {
                return Err(CliError::Usage("percentile thresholds need --climo".into()));
            }
            let rows = score_series(&forecasts, &truths, variable, &specs, cube.as_ref())?;
            write_scores_csv(&rows, create(&a.out)?)?;
            if let Some(j) = &a.json {
                write_text(j, &(serde_json::to_string_pretty(&rows).map_err(IoError::from)? + "\n"))?;
            }
            println!("{} score rows -> {}", rows.len(), a.out.display());
        }
        Metric::Rmse | Metric::Acc => {
            let (metric, name) = if a.metric == Metric::Rmse { (ContinuousMetric::Rmse, "rmse") } else { (ContinuousMetric::Acc, "acc") };
            if metric == ContinuousMetric::Acc && cube.is_none() {
                return Err(CliError::Usage("acc needs --climo".into()));
            }
            let rows = continuous_series(&forecasts, &truths, variable, metric, cube.as_ref())?;
            write_continuous_csv(&rows, name, create(&a.out)?)?;
            if let Some(j) = &a.json {
                write_text(j, &(serde_json::to_string_pretty(&rows).map_err(IoError::from)? + "\n"))?;
            }
            println!("{} {name} rows -> {}", rows.len(), a.out.display());
        }
    }
    let config = json!({
        "variable": variable,
        "metric": format!("{:?}", a.metric).to_lowercase(),
        "thresholds": a.thresholds,
        "percentiles": a.percentiles,
    });
    finish(Manifest::new("verify", config)?, &inputs, &[&a.out])
}

fn intensity_columns(a: &IntensityArgs) -> IntensityColumns {
    IntensityColumns { wind: a.wind_column.clone(), pressure: a.pressure_column.clone() }
}

fn read_best_track(path: &Path, columns: &IntensityColumns) -> CliResult<IbtracsParse> {
    let parsed = parse_ibtracs_csv_with(&read_text(path)?, columns)?;
    if parsed.off_synoptic + parsed.skipped > 0 {
        eprintln!("{}: dropped {} off-synoptic and {} unreadable rows", path.display(), parsed.off_synoptic, parsed.skipped);
    }
    Ok(parsed)
}

fn load_statics(orography: &Path, mask: &Path) -> CliResult<StaticFields> {
    let take = |path: &Path, name: &str| -> CliResult<stormscope_core::Field> {
        let pack = read_pack(path)?;
        if pack.variable_index(name).is_none() {
            return Err(IoError::Data(format!("{} has no {name} array", path.display())).into());
        }
        let fs = pack.fieldsets_of(|n| (n == name).then(|| n.to_string()))?;
        let first = fs.into_iter().next().ok_or_else(|| IoError::Data(format!("{} has no times", path.display())))?;
        Ok(first.require(parse_variable(name)?)?.clone())
    };
    Ok(StaticFields::new(take(orography, "OROG")?, take(mask, "LSM")?)?)
}

/// Tracks one storm through one forecast pack.
pub fn track_from_inputs(
    forecast: &[FieldSet],
    best: &IbtracsParse,
    sid: &str,
    init_time: Option<NaiveDateTime>,
    statics: Option<&StaticFields>,
    cfg: &TrackerConfig,
) -> CliResult<TCTrack> {
    let obs = best.track(sid).ok_or_else(|| IoError::Data(format!("storm {sid} not in the best track")))?;
    let first = forecast.first().ok_or_else(|| IoError::Data("forecast pack has no members".into()))?;
    let init = init_time.unwrap_or(first.valid_time() - chrono::Duration::hours(first.lead_hours() as i64));
    let members: Vec<FieldSet> = forecast
        .iter()
        .filter(|fs| fs.valid_time() - chrono::Duration::hours(fs.lead_hours() as i64) == init)
        .cloned()
        .collect();
    if members.is_empty() {
        return Err(IoError::Data(format!("forecast pack has no members initialised at {init}")).into());
    }
    let at_init = obs.point_at(init).ok_or_else(|| IoError::Data(format!("storm {sid} has no best-track fix at {init}")))?;
    let extratropical: BTreeSet<NaiveDateTime> = obs.points.iter().filter(|p| p.nature == StormNature::Extratropical).map(|p| p.time).collect();
    let request = TrackRequest { sid, init_time: init, observed: LatLon::new(at_init.lat, at_init.lon), extratropical: Some(&extratropical) };
    Ok(track_tc(&members, &request, statics, cfg)?)
}

fn tc_track(a: &TcTrackArgs) -> CliResult {
    let forecast = read_pack(&a.forecast)?.to_fieldsets()?;
    let best = read_best_track(&a.obs, &intensity_columns(&a.intensity))?;
    let cfg = match &a.config {
        Some(p) => parse_tracker(&read_text(p)?)?,
        None => TrackerConfig::default(),
    };
    let statics = match (&a.orography, &a.mask) {
        (Some(o), Some(m)) => Some(load_statics(o, m)?),
        _ => None,
    };
    let init = a.init_time.as_deref().map(parse_time).transpose()?;
    let track = track_from_inputs(&forecast, &best, &a.sid, init, statics.as_ref(), &cfg)?;
    write_text(&a.out, &tracks_to_json(std::slice::from_ref(&track))?)?;
    let mut inputs: Vec<&Path> = vec![&a.forecast, &a.obs];
    inputs.extend(a.orography.as_deref());
    inputs.extend(a.mask.as_deref());
    inputs.extend(a.config.as_deref());
    let config = json!({ "sid": a.sid, "init_time": track.init_time, "tracker": cfg, "wind_column": a.intensity.wind_column, "pressure_column": a.intensity.pressure_column });
    finish(Manifest::new("tc track", config)?, &inputs, &[&a.out])?;
    println!("{}: {} points, {} -> {}", track.sid, track.points.len(), track.termination.as_str(), a.out.display());
    Ok(())
}

fn tc_eval(a: &TcEvalArgs) -> CliResult {
    let mut tracks = Vec::new();
    for p in &a.tracks {
        tracks.extend(tracks_from_json(&read_text(p)?)?);
    }
    let is_json = a.reference.extension().is_some_and(|e| e == "json");
    let mut collection = Vec::with_capacity(tracks.len());
    if is_json {
        let refs = tracks_from_json(&read_text(&a.reference)?)?;
        for t in &tracks {
            let r = refs
                .iter()
                .find(|r| r.sid == t.sid && r.init_time == t.init_time)
                .or_else(|| refs.iter().find(|r| r.sid == t.sid))
                .ok_or_else(|| IoError::Data(format!("storm {} not in the reference tracks", t.sid)))?;
            collection.push(pair_tracks(t, Reference::Tracked(r)));
        }
    } else {
        let best = read_best_track(&a.reference, &intensity_columns(&a.intensity))?;
        for t in &tracks {
            let obs = best.track(&t.sid).ok_or_else(|| IoError::Data(format!("storm {} not in the best track", t.sid)))?;
            collection.push(pair_tracks(t, Reference::Observed(obs)));
        }
    }
    let rows = summarize(&collection);
    write_eval_csv(&rows, create(&a.out)?)?;
    let mut inputs: Vec<&Path> = a.tracks.iter().map(|p| p.as_path()).collect();
    inputs.push(&a.reference);
    let config = json!({ "wind_column": a.intensity.wind_column, "pressure_column": a.intensity.pressure_column });
    finish(Manifest::new("tc eval", config)?, &inputs, &[&a.out])?;
    println!("{} tracks, {} lead rows -> {}", tracks.len(), rows.len(), a.out.display());
    Ok(())
}

/// The training run behind `ddpm train`, shared with tests.
pub fn train_from_pack(pack: &FieldPack, file: &TrainingFile) -> CliResult<(SavedModel, Vec<f64>, Option<usize>)> {
    let (pairs, variables) = pairs_from_pack(pack)?;
    let (samples, standardizer) = encode_pairs(&pairs, &variables)?;
    let schedule = file.schedule.build()?;
    let model = Denoiser::init(file.model.denoiser(variables.len()), file.model.init_seed)?;
    let outcome = train(model, &samples, &schedule, &file.train.train_config())?;
    Ok((SavedModel { model: outcome.model, standardizer, schedule }, outcome.losses, outcome.diverged_at))
}

fn ddpm_train(a: &DdpmTrainArgs) -> CliResult {
    let file = match &a.config {
        Some(p) => parse_training(&read_text(p)?)?,
        None => TrainingFile::default(),
    };
    let pack = read_pack(&a.data)?;
    let (saved, losses, diverged) = train_from_pack(&pack, &file)?;
    if let Some(p) = &a.loss_csv {
        write_loss_csv(&losses, create(p)?)?;
    }
    if let Some(i) = diverged {
        return Err(CliError::Numeric(format!("training diverged at iteration {}", i + 1)));
    }
    model_to_pack(&saved)?.write_file(&a.out)?;
    let mut inputs: Vec<&Path> = vec![&a.data];
    inputs.extend(a.config.as_deref());
    let mut outputs: Vec<&Path> = vec![&a.out];
    outputs.extend(a.loss_csv.as_deref());
    finish(Manifest::new("ddpm train", file)?, &inputs, &outputs)?;
    let first = losses.first().copied().unwrap_or(f64::NAN);
    let last = losses.last().copied().unwrap_or(f64::NAN);
    println!("{} iterations, loss {first} -> {last}, {} parameters -> {}", losses.len(), saved.model.num_params(), a.out.display());
    Ok(())
}

/// Samples every condition; condition `i` uses seed `seed + i`, so the result
/// does not depend on the worker count.
pub fn sample_conditions(saved: &SavedModel, conditions: &[FieldSet], lead_step: u32, seed: u64) -> CliResult<Vec<FieldSet>> {
    let results: Vec<CliResult<FieldSet>> = conditions
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let grid = *c.grid().ok_or_else(|| IoError::Data("empty condition".into()))?;
            let cond = saved.standardizer.encode(c)?;
            let out = sample(&saved.model, saved.standardizer.stats.len(), &cond, lead_step, &saved.schedule, &mut rng)?;
            if out.data.iter().any(|v| !v.is_finite()) {
                return Err(CliError::Numeric(format!("non-finite sample for condition {i}")));
            }
            Ok(saved.standardizer.decode(&out, grid, c.valid_time(), c.lead_hours())?)
        })
        .collect();
    results.into_iter().collect()
}

fn ddpm_sample(a: &DdpmSampleArgs) -> CliResult {
    let saved = model_from_pack(&read_pack(&a.params)?)?;
    let conditions = conditions_from_pack(&read_pack(&a.condition)?)?;
    let samples = sample_conditions(&saved, &conditions, a.lead_step, a.seed)?;
    let mut pack = FieldPack::from_fieldsets(&samples)?;
    pack.attrs.insert("kind".into(), "refined".into());
    pack.write_file(&a.out)?;
    let config = json!({ "lead_step": a.lead_step, "seed": a.seed });
    finish(Manifest::new("ddpm sample", config)?, &[&a.params, &a.condition], &[&a.out])?;
    println!("{} samples -> {}", samples.len(), a.out.display());
    Ok(())
}

/// A small network and batch for checking gradients without inputs.
pub fn gradcheck_toy(seed: u64) -> CliResult<(Denoiser, Vec<RefineSample>, DiffusionSchedule)> {
    let spec = ToyRefineSpec { rows: 6, cols: 7, ..Default::default() };
    let batch = spec.samples(2, seed)?;
    let config = DenoiserConfig { channels: 1, cond_channels: 1, width: 4, blocks: 2, embed_dim: 4, wrap_rows: false };
    Ok((Denoiser::init(config, seed)?, batch, stormscope_core::ddpm::respaced_schedule(20)?))
}

fn ddpm_gradcheck(a: &DdpmGradcheckArgs) -> CliResult {
    let (mut model, batch, schedule) = match (&a.params, &a.data) {
        (Some(p), Some(d)) => {
            let saved = model_from_pack(&read_pack(p)?)?;
            let (pairs, variables) = pairs_from_pack(&read_pack(d)?)?;
            if variables != saved.standardizer.variables() {
                return Err(IoError::Data("training pack variables differ from the model's".into()).into());
            }
            let batch = pairs
                .iter()
                .take(4)
                .map(|p| RefineSample::from_fieldsets(&p.condition, &p.target, p.lead_step, &saved.standardizer))
                .collect::<Result<Vec<_>, _>>()?;
            (saved.model, batch, saved.schedule)
        }
        _ => gradcheck_toy(a.seed)?,
    };
    let report = grad_check(&mut model, &batch, &schedule, a.seed, a.n_params, a.step)?;
    println!("checked {} parameters, max relative error {:e} at parameter {}", report.checked, report.max_rel_error, report.worst_param);
    if !(report.max_rel_error <= a.tolerance) {
        return Err(CliError::Numeric(format!("max relative error {:e} exceeds {:e}", report.max_rel_error, a.tolerance)));
    }
    Ok(())
}

fn grid_of(g: &GridArgs) -> CliResult<GridSpec> {
    GridSpec::new(g.nlat, g.nlon, g.lat0, g.dlat, g.lon0, g.dlon).map_err(|e| CliError::Usage(e.to_string()))
}

fn synth_vortex(a: &SynthVortexArgs) -> CliResult {
    let grid = grid_of(&a.grid)?;
    let spec = VortexSpec {
        center: LatLon::new(a.lat, a.lon),
        r_max_km: a.r_max_km,
        v_max: a.v_max,
        ambient_msl: a.ambient_msl,
        depth: a.depth,
        steering: (a.steer_u, a.steer_v),
    };
    let init = parse_time(&a.init_time)?;
    let (pack, truth) = vortex_case(&grid, &spec, a.steps, a.dt_hours, init)?;
    if truth.truncated {
        eprintln!("vortex left the grid after {} of {} steps", truth.centers.len() - 1, a.steps);
    }
    pack.write_file(&a.out)?;
    write_text(&a.truth, &(serde_json::to_string_pretty(&truth).map_err(IoError::from)? + "\n"))?;
    let mut outputs: Vec<&Path> = vec![&a.out, &a.truth];
    if let Some(p) = &a.best_track {
        let mut csv = String::from("SID,NAME,ISO_TIME,NATURE,LAT,LON,WMO_WIND,WMO_PRES\n");
        for (i, c) in truth.centers.iter().enumerate() {
            let t = init + chrono::Duration::hours(i as i64 * a.dt_hours as i64);
            let kt = a.v_max / crate::ibtracs::KNOT_MS;
            csv.push_str(&format!("{},{},{},TS,{},{},{kt},{}\n", a.sid, a.sid, t.format("%Y-%m-%d %H:%M:%S"), c.lat, c.lon, a.ambient_msl - a.depth));
        }
        write_text(p, &csv)?;
        outputs.push(p);
    }
    finish(Manifest::new("synth vortex", &truth)?, &[], &outputs)?;
    println!("{} members -> {}", truth.centers.len(), a.out.display());
    Ok(())
}

fn synth_refine(a: &SynthRefineArgs) -> CliResult {
    let spec = ToyRefineSpec { rows: a.size, cols: a.size, ..Default::default() };
    let samples = spec.samples(a.n, a.seed)?;
    let start = parse_time("2018-01-01T00:00:00")?;
    let pairs = spec.training_pairs(&samples, start)?;
    pairs_to_pack(&pairs, &[parse_variable("T2M")?])?.write_file(&a.out)?;
    finish(Manifest::new("synth refine-pairs", json!({ "spec": spec, "n": a.n, "seed": a.seed }))?, &[], &[&a.out])?;
    println!("{} pairs -> {}", pairs.len(), a.out.display());
    Ok(())
}

fn synth_plateau(a: &SynthPlateauArgs) -> CliResult {
    let grid = grid_of(&a.grid)?;
    let statics = plateau_statics(&grid, LatLon::new(a.lat, a.lon), a.radius_km, a.height_m)?;
    statics_to_pack(&statics)?.write_file(&a.out)?;
    let config = json!({ "lat": a.lat, "lon": a.lon, "radius_km": a.radius_km, "height_m": a.height_m, "grid": grid });
    finish(Manifest::new("synth plateau", config)?, &[], &[&a.out])?;
    println!("plateau -> {}", a.out.display());
    Ok(())
}

fn fixtures_validate(a: &FixturesValidateArgs) -> CliResult {
    let catalog = FixtureCatalog::load(&a.dir)?;
    let problems = validate_fixtures(&a.dir, &catalog);
    for p in &problems {
        eprintln!("{}: {}", p.name, p.problem);
    }
    if problems.is_empty() {
        println!("{} fixtures ok", catalog.fixtures.len());
        Ok(())
    } else {
        Err(IoError::Data(format!("{} fixture problem(s)", problems.len())).into())
    }
}

fn fixtures_regenerate(a: &FixturesValidateArgs) -> CliResult {
    let mut catalog = FixtureCatalog::load(&a.dir)?;
    for f in &mut catalog.fixtures {
        let path = a.dir.join(&f.path);
        if let Some(bytes) = crate::fixtures::regenerate(&f.name) {
            std::fs::write(&path, bytes?).map_err(|source| IoError::File { path: path.clone(), source })?;
        }
        f.sha256 = crate::manifest::file_digest(&path)?.sha256;
    }
    let text = serde_json::to_string_pretty(&catalog).map_err(IoError::from)? + "\n";
    write_text(&a.dir.join(crate::fixtures::CATALOG), &text)?;
    println!("{} fixtures catalogued", catalog.fixtures.len());
    Ok(())
}
