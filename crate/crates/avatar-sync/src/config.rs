//! Story config files on disk.

use std::path::Path;

use avatar_sync_core::narrative::{self, ConfigError, Finding};
use avatar_sync_core::NarrativeConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Invalid { path: String, source: ConfigError },
}

pub fn load_config_file(path: &Path) -> Result<NarrativeConfig, ConfigFileError> {
    let bytes = read(path)?;
    narrative::load_config(&bytes).map_err(|source| ConfigFileError::Invalid {
        path: path.display().to_string(),
        source,
    })
}

/// Lint findings for a file. A file that is not JSON at all yields a single
/// parse error rather than findings.
pub fn lint_config_file(path: &Path) -> Result<Vec<Finding>, ConfigFileError> {
    let bytes = read(path)?;
    let value: serde_json::Value = serde_json::from_slice(&bytes).map_err(|e| ConfigFileError::Invalid {
        path: path.display().to_string(),
        source: ConfigError::ParseError(e.to_string()),
    })?;
    Ok(narrative::validate_config(&value))
}

fn read(path: &Path) -> Result<Vec<u8>, ConfigFileError> {
    std::fs::read(path).map_err(|source| ConfigFileError::Io {
        path: path.display().to_string(),
        source,
    })
}
