use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use lfgp::oscillator::subsample_training;
use lfgp::{
    optimize_hyperparams, predict_force, predict_force_marginal, Channel, Hyperparams, OscillatorParams,
    PosteriorForce, Response, TimeSeries, TrainedModel,
};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{PipelineError, Result, Stage};
use crate::io::{fmt_f64, write_table, Table};
use crate::manifest::{HyperparamRecord, ModeRecord, RestartRecord};
use crate::simulate::{tag, ModeData};

pub fn posterior_file(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("mode{index}_posterior.csv"))
}

#[derive(Debug, Clone)]
pub struct ModeReconstruction {
    pub index: usize,
    pub freq_hz: f64,
    pub hyperparams: Hyperparams<f64>,
    /// `None` when the hyperparameters were supplied rather than optimized.
    pub trained: Option<TrainedModel<f64>>,
    pub training_points: usize,
    pub posterior: PosteriorForce<f64>,
}

#[derive(Debug, Clone)]
pub struct ModeOutcome {
    pub index: usize,
    pub freq_hz: f64,
    pub result: std::result::Result<ModeReconstruction, PipelineError>,
}

impl ModeOutcome {
    pub fn record(&self) -> ModeRecord {
        match &self.result {
            Ok(r) => ModeRecord {
                index: self.index,
                freq_hz: self.freq_hz,
                status: "ok".into(),
                error: None,
                training_points: r.training_points,
                hyperparam_source: Some(if r.trained.is_some() { "optimized" } else { "supplied" }.into()),
                hyperparams: Some(HyperparamRecord::from(&r.hyperparams)),
                lml: r.trained.as_ref().map(|t| t.lml),
                restarts: r
                    .trained
                    .iter()
                    .flat_map(|t| &t.restarts)
                    .map(|o| RestartRecord {
                        initial: HyperparamRecord::from(&o.initial),
                        lml: o.result.as_ref().map(|r| r.1),
                        iterations: o.iterations,
                        converged: o.converged,
                    })
                    .collect(),
            },
            Err(e) => ModeRecord {
                index: self.index,
                freq_hz: self.freq_hz,
                status: "failed".into(),
                error: Some(e.to_string()),
                training_points: 0,
                hyperparam_source: None,
                hyperparams: None,
                lml: None,
                restarts: Vec::new(),
            },
        }
    }
}

/// Evenly spaced prediction instants covering `[t0, t_end]`.
pub fn prediction_grid(t0: f64, t_end: f64, dt: f64) -> Vec<f64> {
    let n = ((t_end - t0) / dt + 1e-9).floor() as usize + 1;
    (0..n).map(|i| t0 + dt * i as f64).collect()
}

fn core_err(e: lfgp::Error) -> PipelineError {
    PipelineError::from_core(Stage::Reconstruct, e)
}

/// Trains (unless `supplied`) and conditions one mode on its noisy responses.
pub fn reconstruct_mode(
    cfg: &RunConfig,
    index: usize,
    osc: &OscillatorParams<f64>,
    noisy: &Response<f64>,
    supplied: Option<Hyperparams<f64>>,
) -> Result<ModeReconstruction> {
    let channels = cfg.channels().map_err(|e| PipelineError { stage: Stage::Reconstruct, ..e })?;
    let train = subsample_training(noisy, cfg.training.dt_train, &channels).map_err(core_err)?;
    let (hyperparams, trained) = match supplied {
        Some(h) => (h, None),
        None if !cfg.optimizer.enabled => {
            return Err(PipelineError::config(
                Stage::Reconstruct,
                format!("mode {index}: optimizer disabled and no hyperparameters supplied"),
            ))
        }
        None => {
            let (t0, _) = train.time_span();
            let subset = if cfg.training.hyper_window > 0.0 {
                train.window(t0, t0 + cfg.training.hyper_window).map_err(core_err)?
            } else {
                train.clone()
            };
            let model = optimize_hyperparams(&subset, osc, &cfg.optimizer_config(index)).map_err(core_err)?;
            (model.hyperparams, Some(model))
        }
    };
    let grid = prediction_grid(noisy.z.t0, noisy.z.t_end(), cfg.prediction_dt());
    let posterior = if cfg.prediction.full_covariance {
        predict_force(&train, &hyperparams, osc, &grid)
    } else {
        predict_force_marginal(&train, &hyperparams, osc, &grid)
    }
    .map_err(core_err)?;
    Ok(ModeReconstruction {
        index,
        freq_hz: osc.natural_frequency_hz(),
        hyperparams,
        trained,
        training_points: train.len(),
        posterior,
    })
}

fn noisy_response(stage: Stage, data: &ModeData, channels: &[Channel]) -> Result<Response<f64>> {
    let template = data.column(stage, "force").or_else(|_| {
        let name = format!("{}_noisy", tag(channels[0]));
        data.column(stage, &name)
    })?;
    let get = |ch: Channel| -> Result<TimeSeries<f64>> {
        let name = format!("{}_noisy", tag(ch));
        if channels.contains(&ch) {
            data.column(stage, &name)
        } else {
            Ok(data.table.series(&name).unwrap_or_else(|| template.map(|_| 0.0)))
        }
    };
    Ok(Response {
        z: get(Channel::Displacement)?,
        zdot: get(Channel::Velocity)?,
        zddot: get(Channel::Acceleration)?,
    })
}

pub fn write_posterior(cfg: &RunConfig, r: &ModeReconstruction, out: &Path) -> Result<()> {
    let p = &r.posterior;
    let dt = cfg.prediction_dt();
    let h = &r.hyperparams;
    let mut t = Table::new(p.times[0], dt)
        .with_meta("quantity", "posterior modal force: mean, marginal std and 95% band")
        .with_meta("units", "modal force N kg^-1/2 (N m kg^-1/2 for torsional modes); time s")
        .with_meta("mode", r.index)
        .with_meta("freq_hz", fmt_f64(r.freq_hz))
        .with_meta(
            "hyperparams",
            format!(
                "sigma_s={} ell={} sigma_z={} sigma_zdot={} sigma_zddot={}",
                fmt_f64(h.sigma_s),
                fmt_f64(h.ell),
                fmt_f64(h.sigma_z),
                fmt_f64(h.sigma_zdot),
                fmt_f64(h.sigma_zddot)
            ),
        )
        .with_meta("optimizer_seed", cfg.optimizer_config(r.index).seed);
    let (lo, hi) = p.interval95();
    t.push("mean", p.mean.clone());
    t.push("std", p.std());
    t.push("lo95", lo);
    t.push("hi95", hi);
    write_table(Stage::Reconstruct, &posterior_file(out, r.index), &t)
}

/// Reconstructs every selected mode found in `input`. Input problems abort
/// the stage; numerical failures are isolated to their mode.
pub fn reconstruct(
    cfg: &RunConfig,
    input: &Path,
    out: &Path,
    modes: &[usize],
    supplied: &BTreeMap<usize, HyperparamRecord>,
) -> Result<Vec<ModeOutcome>> {
    let stage = Stage::Reconstruct;
    let channels = cfg.channels().map_err(|e| PipelineError { stage, ..e })?;
    let model = cfg.load_model().map_err(|e| PipelineError { stage, ..e })?;
    let mut inputs = Vec::with_capacity(modes.len());
    for &k in modes {
        let data = ModeData::read(stage, input, k)?;
        let osc = model.modes[k].osc;
        if (data.freq_hz - osc.natural_frequency_hz()).abs() > 1e-9 * osc.natural_frequency_hz() {
            return Err(PipelineError::config(
                stage,
                format!("mode {k}: file frequency {} Hz differs from the configuration", data.freq_hz),
            ));
        }
        let noisy = noisy_response(stage, &data, &channels)?;
        let hp = match supplied.get(&k) {
            Some(rec) => Some(rec.to_hyperparams().map_err(core_err)?),
            None => None,
        };
        inputs.push((k, osc, noisy, hp));
    }

    let outcomes: Vec<ModeOutcome> = inputs
        .into_par_iter()
        .map(|(k, osc, noisy, hp)| {
            let result = reconstruct_mode(cfg, k, &osc, &noisy, hp);
            if let Err(e) = &result {
                log::warn!("mode {k}: {e}");
            }
            ModeOutcome {
                index: k,
                freq_hz: osc.natural_frequency_hz(),
                result,
            }
        })
        .collect();
    for o in &outcomes {
        if let Ok(r) = &o.result {
            write_posterior(cfg, r, out)?;
        }
    }
    Ok(outcomes)
}
