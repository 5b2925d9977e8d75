//! JSON run manifest: resolved config, seeds, per-mode results and timings.

use std::collections::BTreeMap;
use std::path::Path;

use lfgp::Hyperparams;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, Seeds};
use crate::error::{ErrorKind, PipelineError, Result, Stage};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperparamRecord {
    pub sigma_s: f64,
    pub ell: f64,
    pub sigma_z: f64,
    pub sigma_zdot: f64,
    pub sigma_zddot: f64,
}

impl From<&Hyperparams<f64>> for HyperparamRecord {
    fn from(h: &Hyperparams<f64>) -> Self {
        Self {
            sigma_s: h.sigma_s,
            ell: h.ell,
            sigma_z: h.sigma_z,
            sigma_zdot: h.sigma_zdot,
            sigma_zddot: h.sigma_zddot,
        }
    }
}

impl HyperparamRecord {
    pub fn to_hyperparams(&self) -> lfgp::Result<Hyperparams<f64>> {
        Hyperparams::new(self.sigma_s, self.ell, self.sigma_z, self.sigma_zdot, self.sigma_zddot)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartRecord {
    pub initial: HyperparamRecord,
    pub lml: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeRecord {
    pub index: usize,
    pub freq_hz: f64,
    /// `ok` or `failed`.
    pub status: String,
    pub error: Option<String>,
    pub training_points: usize,
    /// `optimized` or `supplied`.
    pub hyperparam_source: Option<String>,
    pub hyperparams: Option<HyperparamRecord>,
    pub lml: Option<f64>,
    pub restarts: Vec<RestartRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub mode: usize,
    pub freq_hz: f64,
    pub m_rms: f64,
    pub m_mag: f64,
    pub m_phase: f64,
    pub m_peak: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub software: String,
    pub version: String,
    pub config: RunConfig,
    pub seeds: Seeds,
    pub stages: Vec<String>,
    pub modes: Vec<ModeRecord>,
    pub metrics: Vec<MetricRow>,
    /// Wall-clock seconds per stage; the only non-reproducible content.
    pub timings_s: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(config: &RunConfig) -> Self {
        Self {
            software: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            seeds: config.seeds(),
            stages: Vec::new(),
            modes: Vec::new(),
            metrics: Vec::new(),
            timings_s: BTreeMap::new(),
        }
    }

    pub fn record_stage(&mut self, stage: Stage, seconds: f64) {
        self.stages.push(stage.to_string());
        self.timings_s.insert(stage.to_string(), seconds);
    }

    pub fn write(&self, stage: Stage, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(stage, dir, e))?;
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, text + "\n").map_err(|e| PipelineError::io(stage, &path, e))
    }

    pub fn read(stage: Stage, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(stage, path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| PipelineError::new(stage, ErrorKind::Io, format!("{}: {e}", path.display())))
    }

    /// Trained hyperparameters by mode index.
    pub fn hyperparams(&self) -> BTreeMap<usize, HyperparamRecord> {
        self.modes
            .iter()
            .filter_map(|m| m.hyperparams.map(|h| (m.index, h)))
            .collect()
    }

    /// Copy without wall-clock timings, for reproducibility comparisons.
    pub fn without_timings(&self) -> Self {
        let mut m = self.clone();
        m.timings_s.clear();
        m
    }
}
