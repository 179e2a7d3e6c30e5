//! `dscore` command-line tool.

mod commands;
mod context;
mod error;
mod table;

use std::net::IpAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use context::Context;

#[derive(Parser, Debug)]
#[command(
    name = "dscore",
    version,
    about = "Expert-weighted attack detectability scores for IoT device models"
)]
pub struct Cli {
    /// Taxonomy file (TOML). Defaults to the bundled taxonomy.
    #[arg(long, global = true)]
    pub taxonomy: Option<PathBuf>,
    /// Scenario configuration (TOML). Defaults to the bundled example.
    #[arg(long, global = true)]
    pub scenario_config: Option<PathBuf>,
    /// Directory for written artifacts.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Drop responses whose mean consistency ratio exceeds this value.
    #[arg(long, global = true)]
    pub cr_threshold: Option<f64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// More detail on stderr; repeat for more.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Derive scenario weights from expert responses and write a model file.
    Weights(WeightsArgs),
    /// Merge a static profile with features extracted from flow records.
    Extract(ExtractArgs),
    /// Score device profiles against scenario models.
    Score(ScoreArgs),
    /// Traffic predictability report: KPIs, Hurst, group tests, correlations.
    Predictability(PredictabilityArgs),
    /// Check the taxonomy and scenario configuration.
    ValidateTaxonomy,
    /// Share of respondents keeping each category and sub-category.
    FilteringStats(FilteringArgs),
    /// Convert a wide survey export into the long response format.
    ImportResponses(ImportArgs),
}

#[derive(Args, Debug)]
pub struct WeightsArgs {
    #[arg(long)]
    pub responses: PathBuf,
    #[arg(long)]
    pub scenario: String,
    #[arg(long, default_value = "eigenvector")]
    pub method: dscore::ahp::WeightMethod,
    /// Also count the sub-category matrix CR in each response's mean CR.
    #[arg(long)]
    pub include_subcategory_cr: bool,
    /// Model file name inside --out-dir (default `<scenario>.model.toml`).
    #[arg(long)]
    pub output: Option<String>,
}

#[derive(Args, Debug)]
pub struct ExtractArgs {
    #[arg(long)]
    pub flows: PathBuf,
    #[arg(long)]
    pub device_ip: IpAddr,
    /// Profile file with static and declared values.
    #[arg(long = "static")]
    pub static_profile: PathBuf,
    /// First local hour of the night window used for CCOM.
    #[arg(long, default_value_t = 0)]
    pub night_start: u32,
    /// Local hour at which the night window ends.
    #[arg(long, default_value_t = 6)]
    pub night_end: u32,
    /// Device-local offset from UTC in minutes.
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub utc_offset: i32,
    /// Profile file name inside --out-dir (default derived from the model id).
    #[arg(long)]
    pub output: Option<String>,
}

#[derive(Args, Debug)]
pub struct ScoreArgs {
    #[arg(long = "model", required = true)]
    pub models: Vec<PathBuf>,
    #[arg(long = "profile", required = true)]
    pub profiles: Vec<PathBuf>,
    /// Score table file name inside --out-dir.
    #[arg(long, default_value = "scores.txt")]
    pub output: String,
}

#[derive(Args, Debug)]
pub struct PredictabilityArgs {
    /// `GROUP,DEVICE_IP,FLOWS[,PROFILE]`; repeat per device.
    #[arg(long = "device", required = true)]
    pub devices: Vec<String>,
    /// Comma-separated static features to correlate with KPI means.
    #[arg(long, value_delimiter = ',')]
    pub correlate: Vec<String>,
    /// Apply the Anis–Lloyd expected-R/S correction.
    #[arg(long)]
    pub anis_lloyd: bool,
    /// Minimum series length for a Hurst estimate.
    #[arg(long, default_value_t = 100)]
    pub min_length: usize,
}

#[derive(Args, Debug)]
pub struct FilteringArgs {
    #[arg(long)]
    pub responses: PathBuf,
}

#[derive(Args, Debug)]
pub struct ImportArgs {
    /// Wide CSV export (`keep:CODE`, `cmp:LEFT:RIGHT`, `demo:KEY` columns).
    #[arg(long)]
    pub wide: PathBuf,
    /// Long-format file name inside --out-dir.
    #[arg(long, default_value = "responses.csv")]
    pub output: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = Context::new(&cli).and_then(|ctx| commands::run(&ctx, &cli.command));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dscore: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
