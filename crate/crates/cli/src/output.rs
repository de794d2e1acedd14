//! CSV tables and JSON run manifests.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::Settings;

#[derive(Serialize, Debug, Clone)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), pass, detail: detail.into() }
    }
}

#[derive(Serialize, Debug, Clone)]
pub struct TruncationRank {
    pub rho: f64,
    pub rank: usize,
}

#[derive(Serialize, Debug)]
pub struct Manifest<'a> {
    pub command: &'a str,
    pub version: &'a str,
    pub config: &'a Settings,
    pub seed: u64,
    pub truncation_ranks: &'a [TruncationRank],
    pub wall_clock_seconds: f64,
    pub csv: String,
    pub rows: usize,
    pub checks: &'a [Check],
    pub all_pass: bool,
}

/// Rows of the per-model statistics tables.
#[derive(Serialize, Debug, Clone)]
pub struct StatRow {
    pub model: String,
    pub rho: f64,
    pub f: String,
    pub quantity: String,
    pub estimate: f64,
    pub error: Option<f64>,
    pub prediction: Option<f64>,
}

pub fn csv_path(dir: &Path, command: &str) -> PathBuf {
    dir.join(format!("{command}.csv"))
}

pub fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> Result<(), String> {
    let mut w = csv::Writer::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    for r in rows {
        w.serialize(r).map_err(|e| e.to_string())?;
    }
    w.flush().map_err(|e| e.to_string())
}

pub fn write_manifest(dir: &Path, command: &str, manifest: &Manifest) -> Result<PathBuf, String> {
    let path = dir.join(format!("{command}.manifest.json"));
    let text = serde_json::to_string_pretty(manifest).map_err(|e| e.to_string())?;
    std::fs::write(&path, text + "\n").map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(path)
}
