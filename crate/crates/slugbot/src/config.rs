//! Loading and saving the single-document JSON configuration.

use std::fs;
use std::path::Path;

use slugbot_core::SimConfig;

use crate::error::{AppError, Result};

/// Parse and validate a configuration document. Missing fields take their
/// defaults; unknown fields are rejected.
pub fn parse_config(text: &str) -> std::result::Result<SimConfig, ConfigLoadError> {
    let cfg: SimConfig = serde_json::from_str(text).map_err(ConfigLoadError::Json)?;
    cfg.validate().map_err(ConfigLoadError::Invalid)?;
    Ok(cfg)
}

#[derive(Debug)]
pub enum ConfigLoadError {
    Json(serde_json::Error),
    Invalid(slugbot_core::ConfigError),
}

pub fn load_config(path: &Path) -> Result<SimConfig> {
    let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    parse_config(&text).map_err(|e| match e {
        ConfigLoadError::Json(e) => AppError::json(path, e),
        ConfigLoadError::Invalid(e) => AppError::Config(e),
    })
}

pub fn config_to_json(cfg: &SimConfig) -> String {
    let mut s = serde_json::to_string_pretty(cfg).expect("config serializes");
    s.push('\n');
    s
}
