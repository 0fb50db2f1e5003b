pub mod artifacts;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod plots;

pub use config::{load_config, Overrides, RunConfig, Stage};
pub use error::CliError;
