//! File formats, sweeps and the command-line layer on top of `divbound-core`.
//!
//! Exit codes: 0 on success, 2 for invalid input, 3 when an inequality under
//! test is violated, 1 for solver failures.

pub mod cli;
pub mod error;
pub mod experiment;
pub mod formats;
pub mod parallel;
pub mod presets;

pub use error::{CliError, CliResult};
