//! Configuration, scenario presets and CSV emission for the `semitunnel`
//! command-line tool.

pub mod config;
pub mod run;

pub use config::{load_config, ConfigError, Flags, RunConfig, Scenario, XGrid};
pub use run::{run_scenario, RunReport};

/// Exit status for a successful run.
pub const EXIT_OK: u8 = 0;
/// Exit status for unreadable or invalid configuration.
pub const EXIT_CONFIG: u8 = 2;
/// Exit status when more than 1% of the rows failed numerically.
pub const EXIT_NUMERICAL: u8 = 3;
/// Exit status for output failures.
pub const EXIT_IO: u8 = 1;

/// Caps the global rayon pool at `SEMITUNNEL_THREADS` when set.
pub fn configure_threads() -> Result<(), ConfigError> {
    let Ok(value) = std::env::var("SEMITUNNEL_THREADS") else {
        return Ok(());
    };
    let n: usize = value.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| ConfigError::Invalid {
        field: "SEMITUNNEL_THREADS",
        reason: format!("expected a positive integer, got {value:?}"),
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| ConfigError::Invalid { field: "SEMITUNNEL_THREADS", reason: e.to_string() })
}
