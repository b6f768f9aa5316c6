//! Configuration-driven experiment runner: reads a TOML experiment
//! description, runs it, and writes CSV/JSON reports plus a manifest.

pub mod config;
pub mod report;
pub mod run;

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

pub use config::{parse_config, ConfigError, ExperimentConfig, ExperimentKind, Format};
pub use run::{config_hash, run_experiment, RunManifest, RunOptions};

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_config(&text)?)
}
