//! Command-line front-end for the measurement laboratory: scenario loading, the builtin
//! fixture catalogue, theorem verification, quadrature sweeps and the brute-force oracle.

pub mod builtins;
pub mod commands;
pub mod error;
pub mod oracle;
pub mod scenario;

pub use error::{exit, CliError, CliResult};
