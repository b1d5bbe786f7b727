use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mdi_prts::cli::{cmd_rate_map, cmd_sweep, cmd_thresholds, cmd_validate, RunConfig};

/// Free-space MDI-QKD key-rate simulator with prefixed-threshold real-time
/// selection: deterministic CSV artifacts from a single config file.
#[derive(Parser)]
#[command(name = "mdi-prts", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Static key rate over a transmittance grid (rate_map.csv).
    RateMap(Common),
    /// Zero-rate boundary and threshold summary (boundary.csv, thresholds.csv).
    Thresholds(Common),
    /// Turbulent-channel rates over a distance sweep (sweep.csv).
    Sweep(Common),
    /// Monte-Carlo oracles against quadrature; exit 0 only if all checks pass.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// Path to the TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSV artifacts.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Suppress progress and summary lines on stdout.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, run): (&Common, fn(&RunConfig, &std::path::Path, bool) -> _) = match &cli.command {
        Command::RateMap(a) => (a, cmd_rate_map),
        Command::Thresholds(a) => (a, cmd_thresholds),
        Command::Sweep(a) => (a, cmd_sweep),
        Command::Validate(a) => (a, cmd_validate),
    };
    let result = RunConfig::load(&args.config).and_then(|config| run(&config, &args.out, args.quiet));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
