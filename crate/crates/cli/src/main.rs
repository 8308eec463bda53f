use std::process::ExitCode;

use clap::Parser;
use semitunnel_cli::{configure_threads, load_config, run_scenario, Flags, EXIT_CONFIG, EXIT_IO, EXIT_NUMERICAL};

/// Semiclassical and exact wavepacket scattering off a square barrier.
#[derive(Debug, Parser)]
#[command(name = "semitunnel", version, about)]
struct Cli {
    #[command(flatten)]
    flags: Flags,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    let config = match load_config(&cli.flags) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let report = match run_scenario(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: cannot write output: {e}");
            return ExitCode::from(EXIT_IO);
        }
    };
    for f in &report.files {
        eprintln!("wrote {}", f.display());
    }
    if report.numerical_failure() {
        eprintln!("error: {} of {} rows failed", report.failed_rows, report.rows);
        return ExitCode::from(EXIT_NUMERICAL);
    }
    ExitCode::SUCCESS
}
