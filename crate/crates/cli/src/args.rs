use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gime_core::ingest::DataFormat;
use gime_core::selector::Mode;
use gime_core::theory::SurrogateModel;
use gime_core::{Merit, MetricId, MetricTypeClass};

#[derive(Debug, Parser)]
#[command(
    name = "gime",
    version,
    about = "Training-data metrics, sensitivity analysis and threshold-gated subset selection"
)]
pub struct Cli {
    /// Worker threads for metric passes and Monte Carlo trials (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the metric vector of a dataset.
    Metrics(MetricsArgs),
    /// Select a subset that passes a threshold spec.
    Select(SelectArgs),
    /// Classify metric sensitivity from a sweep file.
    Sensitivity(SensitivityArgs),
    /// Compare gated, random and full selection under a surrogate model.
    Compare(CompareArgs),
    /// Check the expectation closed forms and the volume identity.
    Verify(VerifyArgs),
    /// Write a synthetic fixture (pool, manifest, thresholds, run config).
    Fixture(FixtureArgs),
    /// Generate a synthetic sensitivity sweep.
    Sweep(SweepArgs),
    /// Check a JSON document against one of the published schemas.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Data format; inferred from the file extension when omitted.
    #[arg(long, value_parser = parse_format)]
    pub format: Option<DataFormat>,
    /// Estimate from a reservoir sample of this many records.
    #[arg(long)]
    pub sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Include bindings, scan counts and notes for every metric.
    #[arg(long)]
    pub explain: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Inputs shared by `select` and `compare`; each overrides the run config.
#[derive(Debug, Args, Default)]
pub struct RunArgs {
    /// Run config JSON; flags take precedence over its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    pub format: Option<DataFormat>,
    /// Threshold spec JSON.
    #[arg(long, conflicts_with_all = ["profile", "policy"])]
    pub spec: Option<PathBuf>,
    /// Sensitivity profile JSON; thresholds are derived with --policy.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    #[arg(long)]
    pub policy: Option<PathBuf>,
    /// Subset size in records.
    #[arg(long, conflicts_with = "target_fraction")]
    pub target: Option<usize>,
    /// Subset size as a fraction of the pool.
    #[arg(long)]
    pub target_fraction: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Estimate pool metrics from a reservoir sample.
    #[arg(long)]
    pub estimate_pool: bool,
    #[arg(long)]
    pub estimate_sample_size: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub verbosity: Option<Verbosity>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_delimiter = ',', value_enum, default_values_t = [StrategyArg::Gime, StrategyArg::Random, StrategyArg::Full])]
    pub strategies: Vec<StrategyArg>,
    #[arg(long, default_value_t = 10)]
    pub repetitions: usize,
    /// `affine:A,B`, `logistic:A,B` or `constant:C`.
    #[arg(long, default_value = "affine:1,0", value_parser = parse_surrogate)]
    pub surrogate: SurrogateModel,
    /// Metric fed to the surrogate.
    #[arg(long, default_value = "variety", value_parser = parse_metric)]
    pub surrogate_metric: MetricId,
}

#[derive(Debug, Args)]
pub struct SensitivityArgs {
    /// Sweep file: `.json` or CSV.
    pub sweep: PathBuf,
    /// Direction of the performance column (CSV sweeps only).
    #[arg(long, value_enum, default_value_t = DirectionArg::Higher)]
    pub direction: DirectionArg,
    #[arg(long, default_value_t = gime_core::sensitivity::DEFAULT_RHO_HIGH)]
    pub rho_high: f64,
    #[arg(long, default_value_t = gime_core::sensitivity::DEFAULT_RHO_MOD)]
    pub rho_mod: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0.3)]
    pub k: f64,
    #[arg(long, default_value_t = 2_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0.005)]
    pub tol: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Number of random volume-identity configurations.
    #[arg(long, default_value_t = 200)]
    pub eq1_configs: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FixtureArgs {
    #[arg(value_enum)]
    pub kind: FixtureKind,
    /// Records (civil, ctr) or days (weather).
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_parser = parse_metric)]
    pub metric: MetricId,
    #[arg(long, default_value = "additive", value_parser = parse_class)]
    pub class: MetricTypeClass,
    #[arg(long, default_value = "affine:1,0", value_parser = parse_surrogate)]
    pub surrogate: SurrogateModel,
    /// Pool fractions, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.4, 0.6, 0.8, 1.0])]
    pub levels: Vec<f64>,
    /// Size of the uniform synthetic pool.
    #[arg(long, default_value_t = 1_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Permute performance across points, breaking any dependence.
    #[arg(long)]
    pub shuffle: bool,
    /// `.json` writes JSON, anything else CSV; stdout gets JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, value_enum)]
    pub schema: crate::schema::SchemaName,
    pub file: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Redraw,
    Repair,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Redraw => Mode::Redraw,
            ModeArg::Repair => Mode::RedrawWithRepair,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verbosity {
    #[default]
    Full,
    /// Keep only the final iteration record.
    Summary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Gime,
    Random,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Higher,
    Lower,
}

impl From<DirectionArg> for Merit {
    fn from(d: DirectionArg) -> Merit {
        match d {
            DirectionArg::Higher => Merit::HigherBetter,
            DirectionArg::Lower => Merit::LowerBetter,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FixtureKind {
    Civil,
    Weather,
    Ctr,
}

fn parse_format(s: &str) -> Result<DataFormat, String> {
    s.parse().map_err(|e: gime_core::Error| e.to_string())
}

fn parse_metric(s: &str) -> Result<MetricId, String> {
    s.parse().map_err(|e: gime_core::Error| e.to_string())
}

fn parse_class(s: &str) -> Result<MetricTypeClass, String> {
    s.parse().map_err(|e: gime_core::Error| e.to_string())
}

pub fn parse_surrogate(s: &str) -> Result<SurrogateModel, String> {
    let (kind, params) = s.split_once(':').unwrap_or((s, ""));
    let nums: Vec<f64> = params
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("`{p}` is not a number")))
        .collect::<Result<_, _>>()?;
    let model = match (kind.trim(), nums.as_slice()) {
        ("affine", [a, b]) => SurrogateModel::Affine { a: *a, b: *b },
        ("logistic", [a, b]) => SurrogateModel::Logistic { a: *a, b: *b },
        ("constant", [c]) => SurrogateModel::Constant { c: *c },
        _ => return Err(format!("expected affine:A,B, logistic:A,B or constant:C, got `{s}`")),
    };
    model.validate().map_err(|e| e.to_string())?;
    Ok(model)
}
