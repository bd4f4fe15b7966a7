use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "stormscope", version, about = "Extreme-weather verification, cyclone tracking and diffusion refinement")]
pub struct Cli {
    /// Threads for data-parallel sections. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Percentile climatology.
    #[command(subcommand)]
    Climo(ClimoCommand),
    /// Score forecasts against truth.
    Verify(VerifyArgs),
    /// Cyclone tracking and track scoring.
    #[command(subcommand)]
    Tc(TcCommand),
    /// Diffusion refiner.
    #[command(subcommand)]
    Ddpm(DdpmCommand),
    /// Synthetic cases with known answers.
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Checked-in fixtures.
    #[command(subcommand)]
    Fixtures(FixturesCommand),
}

#[derive(Debug, Subcommand)]
pub enum ClimoCommand {
    Build(ClimoBuildArgs),
}

#[derive(Debug, Args)]
pub struct ClimoBuildArgs {
    /// History packs (plain or gzip).
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    #[arg(long)]
    pub variable: String,
    #[arg(long, value_delimiter = ',', default_values_t = vec![90.0, 95.0, 98.0, 99.5])]
    pub percentiles: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Csi,
    Sedi,
    Rmse,
    Acc,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub forecast: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub variable: String,
    #[arg(long, value_enum)]
    pub metric: Metric,
    /// Fixed thresholds in the variable's units.
    #[arg(long, value_delimiter = ',', conflicts_with = "percentiles")]
    pub thresholds: Vec<f64>,
    /// Climatological percentiles; need --climo.
    #[arg(long, value_delimiter = ',')]
    pub percentiles: Vec<f64>,
    /// Climatology cube pack.
    #[arg(long)]
    pub climo: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the rows as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum TcCommand {
    Track(TcTrackArgs),
    Eval(TcEvalArgs),
}

#[derive(Debug, Args)]
pub struct IntensityArgs {
    /// Best-track wind column (knots).
    #[arg(long, default_value = "WMO_WIND")]
    pub wind_column: String,
    /// Best-track pressure column (hPa).
    #[arg(long, default_value = "WMO_PRES")]
    pub pressure_column: String,
}

#[derive(Debug, Args)]
pub struct TcTrackArgs {
    /// Forecast pack: the analysis followed by 6-hourly leads.
    #[arg(long)]
    pub forecast: PathBuf,
    /// Best-track CSV.
    #[arg(long)]
    pub obs: PathBuf,
    #[arg(long)]
    pub sid: String,
    /// Defaults to the valid time of the first member.
    #[arg(long)]
    pub init_time: Option<String>,
    /// Pack holding OROG (m).
    #[arg(long, requires = "mask")]
    pub orography: Option<PathBuf>,
    /// Pack holding LSM (land fraction).
    #[arg(long, requires = "orography")]
    pub mask: Option<PathBuf>,
    /// Tracker settings (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub intensity: IntensityArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TcEvalArgs {
    /// Track JSON files.
    #[arg(long, required = true, num_args = 1..)]
    pub tracks: Vec<PathBuf>,
    /// Best-track CSV, or track JSON for a tracked reference.
    #[arg(long)]
    pub reference: PathBuf,
    #[command(flatten)]
    pub intensity: IntensityArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum DdpmCommand {
    Train(DdpmTrainArgs),
    Sample(DdpmSampleArgs),
    Gradcheck(DdpmGradcheckArgs),
}

#[derive(Debug, Args)]
pub struct DdpmTrainArgs {
    /// Training pack of cond:<VAR> / target:<VAR> arrays.
    #[arg(long)]
    pub data: PathBuf,
    /// Training settings (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Loss history CSV.
    #[arg(long)]
    pub loss_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DdpmSampleArgs {
    #[arg(long)]
    pub params: PathBuf,
    /// Pack of conditions, one per time.
    #[arg(long)]
    pub condition: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub lead_step: u32,
    /// Condition `i` is sampled with seed `seed + i`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DdpmGradcheckArgs {
    /// Parameter pack; a small random network when absent.
    #[arg(long, requires = "data")]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value_t = 120)]
    pub n_params: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-5)]
    pub step: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long, default_value_t = 41)]
    pub nlat: usize,
    #[arg(long, default_value_t = 41)]
    pub nlon: usize,
    /// Northernmost latitude.
    #[arg(long, default_value_t = 30.0, allow_negative_numbers = true)]
    pub lat0: f64,
    #[arg(long, default_value_t = 0.25)]
    pub dlat: f64,
    #[arg(long, default_value_t = 130.0)]
    pub lon0: f64,
    #[arg(long, default_value_t = 0.25)]
    pub dlon: f64,
}

#[derive(Debug, Subcommand)]
pub enum SynthCommand {
    /// Advected Rankine vortex plus its true centres.
    Vortex(SynthVortexArgs),
    /// Smooth/sharp training pairs for the refiner.
    RefinePairs(SynthRefineArgs),
    /// Orography plateau and land mask.
    Plateau(SynthPlateauArgs),
}

#[derive(Debug, Args)]
pub struct SynthVortexArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub lat: f64,
    #[arg(long)]
    pub lon: f64,
    #[arg(long, default_value_t = 80.0)]
    pub r_max_km: f64,
    #[arg(long, default_value_t = 35.0)]
    pub v_max: f64,
    #[arg(long, default_value_t = 1010.0)]
    pub ambient_msl: f64,
    #[arg(long, default_value_t = 40.0)]
    pub depth: f64,
    /// Eastward steering (m/s).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub steer_u: f64,
    /// Northward steering (m/s).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub steer_v: f64,
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    #[arg(long, default_value_t = 6)]
    pub dt_hours: u32,
    #[arg(long, default_value = "2018-07-04T12:00:00")]
    pub init_time: String,
    #[arg(long, default_value = "SYNTH")]
    pub sid: String,
    #[arg(long)]
    pub out: PathBuf,
    /// JSON sidecar with the spec and true centres.
    #[arg(long)]
    pub truth: PathBuf,
    /// True centres as a best-track CSV.
    #[arg(long)]
    pub best_track: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthRefineArgs {
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 32)]
    pub size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthPlateauArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub lat: f64,
    #[arg(long)]
    pub lon: f64,
    #[arg(long, default_value_t = 150.0)]
    pub radius_km: f64,
    #[arg(long, default_value_t = 2000.0)]
    pub height_m: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum FixturesCommand {
    Validate(FixturesValidateArgs),
    /// Rewrites the generated fixtures and every catalog digest.
    Regenerate(FixturesValidateArgs),
}

#[derive(Debug, Args)]
pub struct FixturesValidateArgs {
    /// Directory holding catalog.json.
    #[arg(long)]
    pub dir: PathBuf,
}
