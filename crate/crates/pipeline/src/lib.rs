//! Stage drivers behind the `lfgp` command: turbulence synthesis, buffeting
//! simulation, per-mode force reconstruction and comparison metrics.
//!
//! Every stage writes plain CSV files with a `#` header block plus a
//! `manifest.json` describing the run.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod io;
pub mod manifest;
pub mod metrics;
pub mod reconstruct;
pub mod simulate;
pub mod windgen;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

pub use config::RunConfig;
pub use error::{ErrorKind, PipelineError, Result, Stage};
pub use manifest::{HyperparamRecord, MetricRow, ModeRecord, RunManifest};

pub const WIND_DIR: &str = "wind";
pub const SIM_DIR: &str = "sim";
pub const RECON_DIR: &str = "recon";
pub const METRICS_DIR: &str = "metrics";

fn timed<T>(manifest: &mut RunManifest, stage: Stage, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f()?;
    manifest.record_stage(stage, start.elapsed().as_secs_f64());
    Ok(out)
}

fn ensure_dir(stage: Stage, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(stage, dir, e))
}

pub fn cmd_windgen(cfg: &RunConfig, out: &Path) -> Result<RunManifest> {
    ensure_dir(Stage::Windgen, out)?;
    let mut m = RunManifest::new(cfg);
    timed(&mut m, Stage::Windgen, || windgen::windgen(cfg, out))?;
    m.write(Stage::Windgen, out)?;
    Ok(m)
}

pub fn cmd_simulate(cfg: &RunConfig, input: &Path, out: &Path) -> Result<RunManifest> {
    ensure_dir(Stage::Simulate, out)?;
    let mut m = RunManifest::new(cfg);
    timed(&mut m, Stage::Simulate, || {
        let field = windgen::read_turbulence(Stage::Simulate, input)?;
        simulate::simulate(cfg, &field, out)
    })?;
    m.write(Stage::Simulate, out)?;
    Ok(m)
}

/// Reconstructs the selected modes. With `hyperparams`, modes listed in that
/// manifest skip training and reuse the recorded values.
///
/// Per-mode failures are recorded in the returned manifest rather than
/// returned as errors; see [`RunManifest::failed_modes`].
pub fn cmd_reconstruct(
    cfg: &RunConfig,
    input: &Path,
    out: &Path,
    selection: Option<&[usize]>,
    hyperparams: Option<&Path>,
) -> Result<RunManifest> {
    let stage = Stage::Reconstruct;
    let modes = cfg.select_modes(selection).map_err(|e| PipelineError { stage, ..e })?;
    let supplied = match hyperparams {
        Some(p) => RunManifest::read(stage, p)?.hyperparams(),
        None => BTreeMap::new(),
    };
    ensure_dir(stage, out)?;
    let mut m = RunManifest::new(cfg);
    let outcomes = timed(&mut m, stage, || reconstruct::reconstruct(cfg, input, out, &modes, &supplied))?;
    m.modes = outcomes.iter().map(|o| o.record()).collect();
    m.write(stage, out)?;
    Ok(m)
}

pub fn cmd_metrics(
    cfg: &RunConfig,
    truth: &Path,
    pred: &Path,
    out: &Path,
    selection: Option<&[usize]>,
) -> Result<RunManifest> {
    ensure_dir(Stage::Metrics, out)?;
    let mut m = RunManifest::new(cfg);
    m.metrics = timed(&mut m, Stage::Metrics, || metrics::metrics(truth, pred, out, selection))?;
    m.write(Stage::Metrics, out)?;
    Ok(m)
}

/// Runs every stage into subdirectories of `out` and writes the combined
/// manifest to `out/manifest.json`. Metrics cover the modes that were
/// reconstructed successfully.
pub fn cmd_pipeline(cfg: &RunConfig, out: &Path, selection: Option<&[usize]>) -> Result<RunManifest> {
    let modes = cfg.select_modes(selection)?;
    let (wind, sim, recon, met) = (out.join(WIND_DIR), out.join(SIM_DIR), out.join(RECON_DIR), out.join(METRICS_DIR));
    for (stage, d) in [
        (Stage::Windgen, &wind),
        (Stage::Simulate, &sim),
        (Stage::Reconstruct, &recon),
        (Stage::Metrics, &met),
    ] {
        ensure_dir(stage, d)?;
    }

    let mut m = RunManifest::new(cfg);
    let field = timed(&mut m, Stage::Windgen, || windgen::windgen(cfg, &wind))?;
    timed(&mut m, Stage::Simulate, || simulate::simulate(cfg, &field, &sim))?;
    drop(field);
    let outcomes = timed(&mut m, Stage::Reconstruct, || {
        reconstruct::reconstruct(cfg, &sim, &recon, &modes, &BTreeMap::new())
    })?;
    m.modes = outcomes.iter().map(|o| o.record()).collect();
    let ok: Vec<usize> = outcomes.iter().filter(|o| o.result.is_ok()).map(|o| o.index).collect();
    if !ok.is_empty() {
        m.metrics = timed(&mut m, Stage::Metrics, || metrics::metrics(&sim, &recon, &met, Some(&ok)))?;
    }
    m.write(Stage::Metrics, out)?;
    Ok(m)
}

impl RunManifest {
    /// Indices of modes whose reconstruction failed.
    pub fn failed_modes(&self) -> Vec<usize> {
        self.modes.iter().filter(|r| r.status != "ok").map(|r| r.index).collect()
    }
}
