//! `gepu` — build a global policy-uncertainty index and its market-behavior
//! tables from three CSV inputs.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
//! error. Set `GEPU_LOG` (e.g. `GEPU_LOG=debug`) for log verbosity.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gepu_core::pipeline::{ingest_check, run_stages, RunReport, StageSelection};

#[derive(Parser)]
#[command(
    name = "gepu",
    version,
    about = "Global policy-uncertainty index construction and market regressions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the three input files and print a dataset summary
    IngestCheck(CommonArgs),
    /// Emit the index series: rolling PCA per window size plus the
    /// GDP-weighted baseline
    Index(CommonArgs),
    /// Emit the monthly volatility and average-correlation series
    Metrics(CommonArgs),
    /// Emit the correlation and regression tables and the overlay data
    Regress(CommonArgs),
    /// Run the full pipeline
    All(CommonArgs),
}

/// Options shared by every subcommand; flags override the config file.
#[derive(Args)]
pub struct CommonArgs {
    /// TOML config file
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Monthly EPU panel CSV (header `month,<codes...>`)
    #[arg(long, value_name = "FILE")]
    epu: Option<PathBuf>,
    /// Daily closing-price CSV (header `date,<ids...>`; blank cell = holiday)
    #[arg(long, value_name = "FILE")]
    prices: Option<PathBuf>,
    /// GDP values CSV (header `year,economy,gdp_value`)
    #[arg(long, value_name = "FILE")]
    gdp: Option<PathBuf>,
    /// Column of the price file used as the world index
    #[arg(long, value_name = "ID")]
    world_index: Option<String>,
    /// Rolling window sizes in months, comma separated
    #[arg(long, value_name = "T,T,...", value_delimiter = ',')]
    window_sizes: Option<Vec<usize>>,
    /// Restrict the panel to an inclusive month range, FIRST:LAST
    #[arg(long, value_name = "YYYY-MM:YYYY-MM")]
    months: Option<String>,
    /// Minimum overlapping return dates for a pair to enter the monthly
    /// correlation
    #[arg(long, value_name = "N")]
    min_overlap: Option<usize>,
    /// Standard errors: `classical` or `hac`
    #[arg(long, value_name = "MODE")]
    se_mode: Option<String>,
    /// Daily returns: `simple` or `log`
    #[arg(long, value_name = "MODE")]
    return_mode: Option<String>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("GEPU_LOG")).init();
    let cli = Cli::parse();

    let (args, selection) = match &cli.command {
        Command::IngestCheck(args) => {
            return exit_with(run_ingest_check(args));
        }
        Command::Index(args) => (args, StageSelection::index_only()),
        Command::Metrics(args) => (args, StageSelection::metrics_only()),
        Command::Regress(args) => (args, StageSelection::regress_only()),
        Command::All(args) => (args, StageSelection::all()),
    };
    exit_with(run(args, selection))
}

fn exit_with(code: i32) -> ExitCode {
    ExitCode::from(code.clamp(0, 255) as u8)
}

fn run_ingest_check(args: &CommonArgs) -> i32 {
    let config = match config::resolve(args) {
        Ok(config) => config,
        Err(message) => {
            eprintln!("gepu: configuration error: {message}");
            return 2;
        }
    };
    match ingest_check(&config) {
        Ok(summary) => {
            print!("{summary}");
            println!("ok");
            0
        }
        Err(err) => {
            eprintln!("gepu: {err}");
            err.exit_code()
        }
    }
}

fn run(args: &CommonArgs, selection: StageSelection) -> i32 {
    let config = match config::resolve(args) {
        Ok(config) => config,
        Err(message) => {
            eprintln!("gepu: configuration error: {message}");
            return 2;
        }
    };
    match run_stages(&config, selection) {
        Ok(report) => {
            print_summary(&report);
            0
        }
        Err(err) => {
            eprintln!("gepu: {err}");
            err.exit_code()
        }
    }
}

fn print_summary(report: &RunReport) {
    println!(
        "wrote {} data files to {}",
        report.manifest.len(),
        report.config.output_dir
    );
    for entry in &report.manifest {
        println!("  {}  {}", &entry.sha256[..12], entry.file);
    }
    for timing in &report.stage_timings {
        log::info!("stage {}: {:.1} ms", timing.stage, timing.millis);
    }
    if !report.warnings.is_empty() {
        println!("{} warning(s); see run_report.json", report.warnings.len());
        for warning in &report.warnings {
            log::warn!("{warning}");
        }
    }
}
