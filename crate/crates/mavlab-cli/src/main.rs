//! Command-line entry point.
//!
//! Exit codes: 0 on success, 2 on input or validation errors, 3 on
//! empty-result conditions (no events, no time overlap). Diagnostics go
//! to standard error; the `MAVLAB_LOG` environment variable controls
//! verbosity (`error`, `warn`, `info`, `debug`).

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mavlab::episodes::ThresholdConfig;
use mavlab::MavError;

use commands::TableFormat;
use config::{load_config, parse_threshold, ConfigFile};

#[derive(Parser)]
#[command(
    name = "mavlab",
    about = "Non-atomic arbitrage analytics for AMM pools: optimal trade sizing, misalignment episodes, and swap cost decomposition",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Venue/run configuration file (TOML).
    #[arg(long, value_name = "PATH")]
    venue_config: PathBuf,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Threshold rule: `iqr:<multiplier>` or `fixed:<value>`. Overrides
    /// the config file; defaults to `iqr:1.5`.
    #[arg(long, value_name = "SPEC")]
    threshold: Option<String>,
    /// Format of tabular outputs (the report itself is always JSON).
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for TableFormat {
    fn from(value: FormatArg) -> Self {
        match value {
            FormatArg::Csv => TableFormat::Csv,
            FormatArg::Json => TableFormat::Json,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Analyze one venue against a CEX reference: episodes, empirical
    /// MAV, net LVR, and the per-day series.
    Mav {
        /// Swap event log (CSV, or JSONL by extension).
        #[arg(long, value_name = "PATH")]
        swaps: PathBuf,
        /// CEX closes CSV (`timestamp_sec,close`).
        #[arg(long, value_name = "PATH")]
        cex: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Pairwise price-gap and MAV matrices across several venues.
    Cross {
        /// Swap event logs, one per configured venue, in order.
        #[arg(long, value_name = "PATH", required = true)]
        swaps: Vec<PathBuf>,
        /// CEX closes CSV used to align every venue.
        #[arg(long, value_name = "PATH")]
        cex: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Per-swap cost decomposition and the aggregate fee table.
    Costs {
        /// Swap event log with optional gas columns.
        #[arg(long, value_name = "PATH")]
        swaps: PathBuf,
        /// Segment boundary (unix seconds): records before it are "pre".
        #[arg(long, value_name = "TS")]
        cutoff: Option<i64>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Generate a synthetic market fixture with a ground-truth manifest.
    Simulate {
        /// Seed override; the config's `[sim] seed` is the default.
        #[arg(long, value_name = "N")]
        seed: Option<u64>,
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn exit_code_for(err: &MavError) -> u8 {
    match err {
        MavError::EmptySeries(_) | MavError::InsufficientData(_) => 3,
        _ => 2,
    }
}

fn threshold_from(common: &CommonArgs, file: &ConfigFile) -> Result<ThresholdConfig, MavError> {
    if let Some(spec) = &common.threshold {
        return parse_threshold(spec);
    }
    if let Some(spec) = &file.threshold {
        return parse_threshold(spec);
    }
    Ok(ThresholdConfig::default())
}

fn single_venue(file: &ConfigFile) -> Result<mavlab::ingest::VenueConfig, MavError> {
    match (&file.venue, file.venues.len()) {
        (Some(venue), _) => venue.build(),
        (None, 1) => file.venues[0].build(),
        _ => Err(MavError::InvalidInput(
            "config must define exactly one [venue] for this command".into(),
        )),
    }
}

fn run() -> Result<(), MavError> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Mav { swaps, cex, common } => {
            let file = load_config(&common.venue_config)?;
            let venue = single_venue(&file)?;
            let threshold = threshold_from(common, &file)?;
            commands::cmd_mav(
                swaps,
                cex,
                &venue,
                &threshold,
                &common.out,
                common.format.into(),
            )?;
        }
        Command::Cross { swaps, cex, common } => {
            let file = load_config(&common.venue_config)?;
            if file.venues.is_empty() {
                return Err(MavError::InvalidInput(
                    "cross needs [[venues]] entries in the config".into(),
                ));
            }
            let venues: Vec<_> = file
                .venues
                .iter()
                .map(|v| v.build())
                .collect::<Result<_, _>>()?;
            let threshold = threshold_from(common, &file)?;
            commands::cmd_cross(
                swaps,
                cex,
                &venues,
                &threshold,
                &common.out,
                common.format.into(),
            )?;
        }
        Command::Costs {
            swaps,
            cutoff,
            common,
        } => {
            let file = load_config(&common.venue_config)?;
            let venue = single_venue(&file)?;
            commands::cmd_costs(swaps, &venue, *cutoff, &common.out, common.format.into())?;
        }
        Command::Simulate { seed, common } => {
            let file = load_config(&common.venue_config)?;
            let venue = single_venue(&file)?;
            let mut spec = file
                .sim
                .clone()
                .ok_or_else(|| MavError::InvalidSpec("config has no [sim] section".into()))?;
            if let Some(seed) = seed {
                spec.seed = *seed;
            }
            commands::cmd_simulate(&spec, &venue, &common.out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MAVLAB_LOG", "warn"))
        .format_timestamp(None)
        .init();
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
