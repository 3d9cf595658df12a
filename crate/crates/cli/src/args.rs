use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "bgsched",
    version,
    about = "Forecast-driven background scheduling simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bin a trace and write its series, ACF, PACF and decomposition.
    Characterize(CharacterizeArgs),
    /// Fit a forecaster on a training span and score it on a test span.
    Forecast(ForecastArgs),
    /// Replay a trace under one policy.
    Simulate(SimulateArgs),
    /// Replay a trace under both policies and report the violation reduction.
    Compare(CompareArgs),
    /// Generate a synthetic trace and its binned series.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TraceFormatArg {
    /// timestamp,lun,op,offset,length with an optional header.
    Generic,
    /// SNIA / MSR Cambridge CSV.
    Snia,
}

/// Where the series comes from. Exactly one is required.
#[derive(Debug, Clone, Args)]
#[command(group(ArgGroup::new("input").required(true).multiple(false)))]
pub struct InputArgs {
    /// Raw block trace CSV (optionally .gz).
    #[arg(long, group = "input")]
    pub trace: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "generic")]
    pub format: TraceFormatArg,
    /// Binned series CSV as written by `characterize` or `synth`.
    #[arg(long, group = "input")]
    pub series: Option<PathBuf>,
    /// Synthetic profile: `vdi`, `flat`, or `config` for the `[synth]`
    /// section of the config file.
    #[arg(long, group = "input")]
    pub synth: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Seed for every random stream; recorded in the outputs.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Bin width in seconds for raw and synthetic traces.
    #[arg(long)]
    pub interval: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// `key=v1,v2,...`: one run per value, each in `<out>/<key>=<v>/`.
    /// Keys are dotted config paths, or `alpha` for both EWMA factors.
    #[arg(long)]
    pub sweep: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct CharacterizeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 200)]
    pub max_lag: usize,
    /// Decomposition period in bins; defaults to one day.
    #[arg(long)]
    pub period: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Ewma,
    HoltWinters,
}

#[derive(Debug, Clone, Args)]
pub struct ForecastArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long)]
    pub train_days: Option<f64>,
    /// First test day; defaults to the end of the training span.
    #[arg(long)]
    pub test_start_day: Option<f64>,
    #[arg(long)]
    pub test_days: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Fixed,
    Dynamic,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[arg(long, value_enum)]
    pub policy: Option<PolicyArg>,
    /// Training days for the dynamic policy's forecaster.
    #[arg(long)]
    pub train_days: Option<f64>,
    /// Forecaster (`model.json` from `forecast`) instead of fitting on
    /// the training prefix.
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[arg(long)]
    pub train_days: Option<f64>,
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Profile: `vdi`, `flat`, or `config`.
    #[arg(long, default_value = "vdi")]
    pub synth: String,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Also write the record-level trace, one row per IO. At VDI
    /// intensities this runs to hundreds of MB per simulated day.
    #[arg(long)]
    pub records: bool,
}
