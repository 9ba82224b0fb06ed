//! File formats, configuration, checkpoints and commands around `tgcn-core`.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod pool;
pub mod synth;

pub use error::{CliError, CliResult};
