//! Command-line front end: configuration files, z-score ingestion and
//! whitening, and the `bonus` subcommands.

pub mod commands;
pub mod config;
pub mod zscore;

pub use commands::{execute, parse_learner, Cli, Command};
pub use config::{load_config, parse_config, Config, NTildeSetting};
pub use zscore::{ingest_zscores, whiten, ZScoreMatrix};
