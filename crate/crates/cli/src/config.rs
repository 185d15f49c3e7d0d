//! Per-command configuration.
//!
//! Every command has a config struct with complete defaults. A run starts
//! from those defaults, overlays the optional JSON config file and then the
//! command-line flags; the merged struct is what the manifest records.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sheetlab_core::paths::DEFAULT_LEVEL;
use sheetlab_core::spectrum::sampling::DEFAULT_R_LO;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub k: usize,
    pub level: u32,
    pub seed: u64,
    pub replicate: u64,
    /// Hölder exponent for the per-path constant reported on stdout.
    pub alpha: f64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig { k: 1, level: DEFAULT_LEVEL, seed: 1, replicate: 0, alpha: 0.45 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransformConfig {
    pub k: usize,
    pub level: u32,
    pub seed: u64,
    /// Number of frequencies, drawn uniformly from `[-radius, radius]^{k+1}`.
    pub count: usize,
    pub radius: f64,
    pub sample_seed: u64,
}

impl Default for TransformConfig {
    fn default() -> Self {
        TransformConfig { k: 1, level: DEFAULT_LEVEL, seed: 1, count: 20, radius: 256.0, sample_seed: 7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayConfig {
    pub k: usize,
    pub level: u32,
    pub seed: u64,
    pub samples: usize,
    pub radius: f64,
    pub sample_seed: u64,
    /// Levels of the refinement sweep for the envelope constant.
    pub levels: Vec<u32>,
}

impl Default for DecayConfig {
    fn default() -> Self {
        DecayConfig {
            k: 1,
            level: DEFAULT_LEVEL,
            seed: 1,
            samples: 10_000,
            radius: 1024.0,
            sample_seed: 7,
            levels: vec![10, 12, 14],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumRunConfig {
    pub k: usize,
    pub level: u32,
    pub seed: u64,
    pub seeds: usize,
    pub theta: Vec<f64>,
    pub samples: usize,
    pub radius_lo: i32,
    pub radius_hi: i32,
    pub s_step: f64,
    pub s_half_width: f64,
    pub r_lo: f64,
    pub frostman: bool,
    /// `None` picks a level that keeps the ball counts affordable for `k`.
    pub frostman_level: Option<u32>,
    pub frostman_centres: Option<usize>,
    /// Radii `2^-lo ..= 2^-hi`.
    pub frostman_radius_lo: i32,
    pub frostman_radius_hi: Option<i32>,
}

impl Default for SpectrumRunConfig {
    fn default() -> Self {
        SpectrumRunConfig {
            k: 1,
            level: DEFAULT_LEVEL,
            seed: 1,
            seeds: 8,
            theta: vec![0.4, 0.6, 0.8, 1.0],
            samples: 100_000,
            radius_lo: 4,
            radius_hi: 14,
            s_step: 0.05,
            s_half_width: 0.75,
            r_lo: DEFAULT_R_LO,
            frostman: false,
            frostman_level: None,
            frostman_centres: None,
            frostman_radius_lo: 3,
            frostman_radius_hi: None,
        }
    }
}

/// `(level, finest radius exponent, centres)` used when not configured.
pub fn frostman_defaults(k: usize) -> (u32, i32, usize) {
    match k {
        1 => (20, 11, 400),
        2 => (13, 8, 100),
        _ => (8, 6, 50),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnappConfig {
    pub k: usize,
    pub level: u32,
    pub seed: u64,
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    /// Deltas `2^-lo ..= 2^-hi`.
    pub delta_lo: i32,
    pub delta_hi: i32,
    /// Cap centre in `[0, 1]^k`; `None` is the midpoint.
    pub center: Option<Vec<f64>>,
    pub nodes: usize,
}

impl Default for KnappConfig {
    fn default() -> Self {
        KnappConfig {
            k: 1,
            level: DEFAULT_LEVEL,
            seed: 1,
            p: 2.0,
            q: 4.0,
            alpha: sheetlab_core::knapp::DEFAULT_ALPHA,
            delta_lo: 4,
            delta_hi: 9,
            center: None,
            nodes: sheetlab_core::knapp::MIN_NODES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExponentsConfig {
    pub k: i64,
    pub k_max: i64,
}

impl Default for ExponentsConfig {
    fn default() -> Self {
        ExponentsConfig { k: 3, k_max: 6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FiguresConfig {
    /// Directory holding the CSV tables; absent tables that can be computed
    /// exactly are generated into the run directory.
    pub from: Option<PathBuf>,
    /// Figure ids; empty means every figure whose table is available.
    pub figures: Vec<String>,
    pub k_max: usize,
    pub theta_steps: usize,
}

impl Default for FiguresConfig {
    fn default() -> Self {
        FiguresConfig { from: None, figures: Vec::new(), k_max: 6, theta_steps: 20 }
    }
}

/// Reads a config file: a JSON object that is either flat or holds one
/// object per command name.
pub fn load_file(path: &Path, command: &str) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("config {} is not valid JSON: {e}", path.display())))?;
    let Value::Object(map) = value else {
        return Err(CliError::Config(format!("config {} must be a JSON object", path.display())));
    };
    match map.get(command) {
        Some(Value::Object(section)) => Ok(Value::Object(section.clone())),
        _ => Ok(Value::Object(map)),
    }
}

/// Defaults, then `file`, then `flags`; later layers win key by key.
pub fn merge<T: Serialize + DeserializeOwned + Default>(file: Option<Value>, flags: Value) -> Result<T, CliError> {
    let mut merged = serde_json::to_value(T::default()).map_err(|e| CliError::Config(e.to_string()))?;
    for layer in file.into_iter().chain(std::iter::once(flags)) {
        let Value::Object(layer) = layer else { continue };
        let target = merged.as_object_mut().expect("config structs serialize to objects");
        for (key, v) in layer {
            if !v.is_null() {
                target.insert(key, v);
            }
        }
    }
    serde_json::from_value(merged).map_err(|e| CliError::Config(format!("bad configuration: {e}")))
}
