//! Reading state and channel files.

use std::fmt;
use std::path::Path;

use qrs_core::tensor::json::{channel_from_str, state_from_str};
use qrs_core::{DensityOperator, QuantumChannel};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Where an input came from, recorded in every report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InputRecord {
    /// `state`, `channel` or `other`.
    pub role: String,
    pub path: String,
    pub sha256: String,
}

/// An input file that could not be used, with the file and the position or
/// field that failed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InputError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl std::error::Error for InputError {}

fn read(path: &Path, role: &str) -> Result<(String, InputRecord), InputError> {
    let shown = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|e| InputError {
        path: shown.clone(),
        message: e.to_string(),
    })?;
    let record = InputRecord {
        role: role.to_string(),
        path: shown.clone(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    };
    let text = String::from_utf8(bytes).map_err(|e| InputError {
        path: shown,
        message: format!("not UTF-8 at byte {}", e.utf8_error().valid_up_to()),
    })?;
    Ok((text, record))
}

pub fn read_state(path: &Path, role: &str) -> Result<(DensityOperator, InputRecord), InputError> {
    let (text, record) = read(path, role)?;
    let state = state_from_str(&text).map_err(|e| InputError {
        path: record.path.clone(),
        message: e.to_string(),
    })?;
    Ok((state, record))
}

pub fn read_channel(path: &Path) -> Result<(QuantumChannel, InputRecord), InputError> {
    let (text, record) = read(path, "channel")?;
    let channel = channel_from_str(&text).map_err(|e| InputError {
        path: record.path.clone(),
        message: e.to_string(),
    })?;
    Ok((channel, record))
}

/// Splits a comma-separated label list, dropping empty entries.
pub fn labels(list: &str) -> Vec<String> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_label_lists() {
        assert_eq!(labels("A, B,,C"), ["A", "B", "C"]);
        assert!(labels("").is_empty());
    }
}
