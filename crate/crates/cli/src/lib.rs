//! Config-driven entry points behind the `hignn` binary.

pub mod commands;
pub mod config;

pub use commands::{bench, gen_data, predict, simulate_cmd, train_cmd, RunOptions};
pub use config::{load_config, parse_config, Command};
