//! Experiment runner behind the `hbcd` binary: configuration resolution,
//! dispatch onto the core harness, and CSV/JSON emission.

pub mod config;
pub mod output;
pub mod run;

pub use config::{parse_angle, parse_config, ConfigError};
pub use output::RunManifest;
pub use run::{run, RunError, RunOutcome};

/// Exit status for a finished run with every result found.
pub const EXIT_OK: i32 = 0;
/// A result hit its cap or failed; reported in the outputs.
pub const EXIT_INCOMPLETE: i32 = 1;
/// Usage or configuration error.
pub const EXIT_USAGE: i32 = 2;
