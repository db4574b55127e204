//! File formats, TOML pipeline configuration and the `groupscan` command line
//! around [`groupscan_core`].

pub mod artifact;
pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod pipeline;

pub use config::PipelineConfig;
pub use error::{CliError, ExitStatus, Result};
