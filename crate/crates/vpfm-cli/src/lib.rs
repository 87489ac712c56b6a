//! Command-line driver for the vpfm solver: TOML run configurations, the
//! bundled scene library, the stepping loop with its output files, and the
//! flow-map length sweeps.

pub mod bench;
pub mod config;
pub mod driver;
pub mod filament;
pub mod scenes;

pub use config::{ConfigError, RunConfig, SceneName};
pub use driver::{run, RunError, RunOptions, RunSummary};
