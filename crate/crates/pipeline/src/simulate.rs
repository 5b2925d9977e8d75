use std::path::{Path, PathBuf};

use lfgp::oscillator::{add_noise_std, global_index, snr_amplitude_ratio};
use lfgp::scalar::rms;
use lfgp::{
    buffeting_modal_forces, modal_decompose, modal_superpose, newmark_response, Channel, Dof, Newmark,
    OscillatorParams, Response, TimeSeries, TurbulenceField,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{ErrorKind, PipelineError, Result, Stage};
use crate::io::{fmt_f64, read_table, write_table, Table};

pub const SENSORS_CLEAN_FILE: &str = "sensors_clean.csv";
pub const SENSORS_NOISY_FILE: &str = "sensors_noisy.csv";

const MODAL_UNITS: &str = "mass-normalized modal coordinates: force N kg^-1/2, z m kg^1/2, zdot m kg^1/2 s^-1, \
                           zddot m kg^1/2 s^-2 (torsional modes: N m and rad in place of N and m); time s";

pub fn mode_file(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("mode{index}.csv"))
}

/// Short column tag for a response channel.
pub fn tag(ch: Channel) -> &'static str {
    match ch {
        Channel::Displacement => "z",
        Channel::Velocity => "zdot",
        Channel::Acceleration => "zddot",
        Channel::Force => "force",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSimulation {
    pub index: usize,
    pub osc: OscillatorParams<f64>,
    /// Modal load, including the mode's amplitude scale.
    pub force: TimeSeries<f64>,
    pub clean: Response<f64>,
    /// Modal responses recovered from the noisy sensor records.
    pub noisy: Response<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub modes: Vec<ModeSimulation>,
    /// Sensor records per channel, one series per global DOF of the sensor grid.
    pub sensors_clean: Vec<Vec<TimeSeries<f64>>>,
    pub sensors_noisy: Vec<Vec<TimeSeries<f64>>>,
}

fn core_err(e: lfgp::Error) -> PipelineError {
    PipelineError::from_core(Stage::Simulate, e)
}

/// Buffeting loads, modal responses and noisy sensor records for `field`.
///
/// The noise standard deviation of every sensor channel is its clean RMS
/// divided by the SNR amplitude ratio. Each mode's `amplitude_scale` is
/// applied to its load after that noise level is fixed, so a small scale
/// buries the mode in noise.
pub fn simulate_field(cfg: &RunConfig, field: &TurbulenceField<f64>) -> Result<Simulation> {
    let cfg_err = |e: PipelineError| PipelineError { stage: Stage::Simulate, ..e };
    let load_model = cfg.load_model().map_err(cfg_err)?;
    let sensor_model = cfg.sensor_model().map_err(cfg_err)?;
    let sec = cfg.aero_section().map_err(cfg_err)?;
    let ratio = snr_amplitude_ratio(cfg.measurement.snr, cfg.snr_unit().map_err(cfg_err)?);
    if field.nodes.len() != load_model.n_nodes()
        || field.nodes.iter().zip(&load_model.node_coords).any(|(a, b)| (a - b).abs() > 1e-9 * (1.0 + b.abs()))
    {
        return Err(PipelineError::config(
            Stage::Simulate,
            "turbulence field nodes do not match the configured load grid",
        ));
    }
    if let Some(s) = field.u.first() {
        if (s.dt - cfg.wind.dt).abs() > 1e-12 * cfg.wind.dt {
            return Err(PipelineError::config(Stage::Simulate, "turbulence field time step differs from wind.dt"));
        }
    }

    let forces = buffeting_modal_forces(field, &load_model, &sec).map_err(core_err)?;
    let responses: Vec<Response<f64>> = load_model
        .modes
        .par_iter()
        .zip(forces.par_iter())
        .map(|(mode, f)| newmark_response(&mode.osc, f, Newmark::default(), 0.0, 0.0))
        .collect::<lfgp::Result<_>>()
        .map_err(core_err)?;

    let scales: Vec<f64> = cfg.structure.modes.iter().map(|m| m.amplitude_scale).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seeds().noise);
    let mut sensors_clean = Vec::new();
    let mut sensors_noisy = Vec::new();
    let mut modal_noisy = Vec::new();
    for ch in Channel::RESPONSES {
        let q: Vec<TimeSeries<f64>> = responses.iter().map(|r| r.channel(ch).unwrap().clone()).collect();
        let q_scaled: Vec<TimeSeries<f64>> = q.iter().zip(&scales).map(|(s, &a)| s.scaled(a)).collect();
        let reference = modal_superpose(&q, &sensor_model).map_err(core_err)?;
        let clean = modal_superpose(&q_scaled, &sensor_model).map_err(core_err)?;
        let noisy: Vec<TimeSeries<f64>> = clean
            .iter()
            .zip(&reference)
            .map(|(s, r)| add_noise_std(s, rms(&r.values) / ratio, &mut rng))
            .collect();
        modal_noisy.push(modal_decompose(&noisy, &sensor_model).map_err(core_err)?);
        sensors_clean.push(clean);
        sensors_noisy.push(noisy);
    }

    let modes = load_model
        .modes
        .iter()
        .enumerate()
        .map(|(j, mode)| ModeSimulation {
            index: j,
            osc: mode.osc,
            force: forces[j].scaled(scales[j]),
            clean: responses[j].scaled(scales[j]),
            noisy: Response {
                z: modal_noisy[0][j].clone(),
                zdot: modal_noisy[1][j].clone(),
                zddot: modal_noisy[2][j].clone(),
            },
        })
        .collect();
    Ok(Simulation {
        modes,
        sensors_clean,
        sensors_noisy,
    })
}

pub fn write_simulation(cfg: &RunConfig, sim: &Simulation, out: &Path) -> Result<()> {
    let seeds = cfg.seeds();
    for m in &sim.modes {
        let mc = &cfg.structure.modes[m.index];
        let mut t = Table::new(m.force.t0, m.force.dt)
            .with_meta("quantity", "true modal force, clean and noisy modal responses")
            .with_meta("units", MODAL_UNITS)
            .with_meta("mode", m.index)
            .with_meta("freq_hz", fmt_f64(m.osc.natural_frequency_hz()))
            .with_meta("zeta", fmt_f64(m.osc.zeta))
            .with_meta("mass", fmt_f64(m.osc.mass))
            .with_meta("dof", &mc.dof)
            .with_meta("amplitude_scale", fmt_f64(mc.amplitude_scale))
            .with_meta("wind_seed", seeds.wind)
            .with_meta("noise_seed", seeds.noise);
        t.push_series("force", &m.force);
        for ch in Channel::RESPONSES {
            t.push_series(tag(ch), m.clean.channel(ch).unwrap());
        }
        for ch in Channel::RESPONSES {
            t.push_series(&format!("{}_noisy", tag(ch)), m.noisy.channel(ch).unwrap());
        }
        write_table(Stage::Simulate, &mode_file(out, m.index), &t)?;
    }

    let active: Vec<Dof> = Dof::ALL
        .into_iter()
        .filter(|d| cfg.structure.modes.iter().any(|m| Dof::parse(&m.dof) == Some(*d)))
        .collect();
    let coords = cfg.sensor_coords();
    for (file, data, what) in [
        (SENSORS_CLEAN_FILE, &sim.sensors_clean, "clean"),
        (SENSORS_NOISY_FILE, &sim.sensors_noisy, "noisy"),
    ] {
        let first = &data[0][0];
        let mut t = Table::new(first.t0, first.dt)
            .with_meta("quantity", format!("{what} sensor responses, columns <dof><sensor>_<channel>"))
            .with_meta("units", "p and h in m, alpha in rad; _zdot per s, _zddot per s^2; time s")
            .with_meta("sensor_positions_m", coords.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(" "))
            .with_meta("snr", format!("{} {}", fmt_f64(cfg.measurement.snr), cfg.measurement.snr_unit))
            .with_meta("noise_seed", seeds.noise);
        for (c, ch) in Channel::RESPONSES.into_iter().enumerate() {
            for node in 0..coords.len() {
                for &d in &active {
                    t.push_series(
                        &format!("{}{}_{}", d.symbol(), node, tag(ch)),
                        &data[c][global_index(node, d)],
                    );
                }
            }
        }
        write_table(Stage::Simulate, &out.join(file), &t)?;
    }
    Ok(())
}

pub fn simulate(cfg: &RunConfig, field: &TurbulenceField<f64>, out: &Path) -> Result<Simulation> {
    let sim = simulate_field(cfg, field)?;
    write_simulation(cfg, &sim, out)?;
    Ok(sim)
}

/// One mode's table as written by [`write_simulation`].
#[derive(Debug, Clone)]
pub struct ModeData {
    pub table: Table,
    pub freq_hz: f64,
}

impl ModeData {
    pub fn read(stage: Stage, dir: &Path, index: usize) -> Result<Self> {
        let path = mode_file(dir, index);
        let table = read_table(stage, &path)?;
        let freq_hz = table
            .meta("freq_hz")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| PipelineError::new(stage, ErrorKind::Io, format!("{}: missing freq_hz", path.display())))?;
        Ok(Self { table, freq_hz })
    }

    pub fn column(&self, stage: Stage, name: &str) -> Result<TimeSeries<f64>> {
        self.table.series(name).ok_or_else(|| {
            PipelineError::config(stage, format!("mode file has no `{name}` column"))
        })
    }
}
