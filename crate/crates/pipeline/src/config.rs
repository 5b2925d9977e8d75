//! Run configuration loaded from TOML. Every field has a default, and the
//! fully resolved configuration is echoed into the run manifest.

use std::path::{Path, PathBuf};

use lfgp::gp::OptimizerConfig;
use lfgp::oscillator::SnrUnit;
use lfgp::{AeroSection, BfgsOptions, Channel, Dof, ModalModel, ModeSpec, WindConfig};
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Result, Stage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; wind, noise and optimizer seeds are derived from it.
    pub seed: u64,
    pub wind: WindSection,
    pub structure: StructureSection,
    pub aero: AeroSectionConfig,
    pub measurement: MeasurementSection,
    pub training: TrainingSection,
    pub optimizer: OptimizerSection,
    pub prediction: PredictionSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindSection {
    pub mean_speed: f64,
    pub intensity_u: f64,
    pub intensity_w: f64,
    pub length_u: f64,
    pub length_w: f64,
    pub coherence_decay: f64,
    pub dt: f64,
    pub duration: f64,
}

impl Default for WindSection {
    fn default() -> Self {
        Self {
            mean_speed: 30.0,
            intensity_u: 0.08,
            intensity_w: 0.06,
            length_u: 60.0,
            length_w: 60.0,
            coherence_decay: 10.0,
            dt: 0.05,
            duration: 600.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModeConfig {
    pub freq_hz: f64,
    pub zeta: f64,
    /// `lateral`, `vertical` or `torsional`.
    pub dof: String,
    pub half_waves: u32,
    /// Multiplies this mode's contribution to the measured responses after
    /// the noise level has been fixed from the unscaled responses.
    pub amplitude_scale: f64,
}

impl Default for ModeConfig {
    fn default() -> Self {
        Self {
            freq_hz: 0.1,
            zeta: 0.005,
            dof: "vertical".into(),
            half_waves: 1,
            amplitude_scale: 1.0,
        }
    }
}

impl ModeConfig {
    fn new(freq_hz: f64, dof: &str, half_waves: u32) -> Self {
        Self {
            freq_hz,
            dof: dof.into(),
            half_waves,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StructureSection {
    pub span: f64,
    /// Equally spaced nodes (ends included) where wind loads are applied.
    pub load_nodes: usize,
    /// Sensor positions along the span; empty means `sensor_count` equally
    /// spaced interior points.
    pub sensor_positions: Vec<f64>,
    pub sensor_count: usize,
    pub mass_per_length: f64,
    pub inertia_per_length: f64,
    pub modes: Vec<ModeConfig>,
}

impl Default for StructureSection {
    fn default() -> Self {
        Self {
            span: 1624.0,
            load_nodes: 201,
            sensor_positions: Vec::new(),
            sensor_count: 25,
            mass_per_length: 2.27e4,
            inertia_per_length: 2.47e6,
            modes: vec![
                ModeConfig::new(0.052, "lateral", 1),
                ModeConfig::new(0.100, "vertical", 1),
                ModeConfig::new(0.123, "lateral", 2),
                ModeConfig::new(0.278, "torsional", 1),
            ],
        }
    }
}

/// Representative streamlined-box section; not identified from any
/// particular wind-tunnel campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AeroSectionConfig {
    pub rho: f64,
    pub width: f64,
    pub height: f64,
    pub c_d: f64,
    pub c_l: f64,
    pub c_m: f64,
    pub dc_l: f64,
    pub dc_m: f64,
    pub admittance: bool,
}

impl Default for AeroSectionConfig {
    fn default() -> Self {
        let s = AeroSection::<f64>::representative();
        Self {
            rho: s.rho,
            width: s.width,
            height: s.height,
            c_d: s.c_d,
            c_l: s.c_l,
            c_m: s.c_m,
            dc_l: s.dc_l,
            dc_m: s.dc_m,
            admittance: s.admittance_on,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasurementSection {
    pub snr: f64,
    /// `linear` (RMS ratio) or `db`.
    pub snr_unit: String,
}

impl Default for MeasurementSection {
    fn default() -> Self {
        Self {
            snr: 20.0,
            snr_unit: "linear".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSection {
    pub dt_train: f64,
    /// Any of `z`, `zdot`, `zddot`.
    pub channels: Vec<String>,
    /// Length (s) of the leading stretch of training data used for the
    /// likelihood optimization; `0` uses the whole record. Prediction always
    /// conditions on every training point.
    pub hyper_window: f64,
}

impl Default for TrainingSection {
    fn default() -> Self {
        Self {
            dt_train: 1.25,
            channels: vec!["z".into(), "zdot".into(), "zddot".into()],
            hyper_window: 150.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSection {
    /// When false, hyperparameters must be supplied from a previous manifest.
    pub enabled: bool,
    pub restarts: usize,
    pub max_iter: usize,
    pub grad_tol: f64,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let b = BfgsOptions::default();
        Self {
            enabled: true,
            restarts: 3,
            max_iter: b.max_iter,
            grad_tol: b.grad_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictionSection {
    /// Prediction grid spacing; `0` means the simulation step.
    pub dt: f64,
    /// Keep the full posterior covariance (memory grows with the grid squared).
    pub full_covariance: bool,
}

impl Default for PredictionSection {
    fn default() -> Self {
        Self {
            dt: 0.0,
            full_covariance: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            wind: WindSection::default(),
            structure: StructureSection::default(),
            aero: AeroSectionConfig::default(),
            measurement: MeasurementSection::default(),
            training: TrainingSection::default(),
            optimizer: OptimizerSection::default(),
            prediction: PredictionSection::default(),
            output: OutputSection::default(),
        }
    }
}

/// Seeds derived from the master seed, one stream per consumer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub wind: u64,
    pub noise: u64,
    pub optimizer: u64,
}

fn bad(msg: impl Into<String>) -> PipelineError {
    PipelineError::config(Stage::Config, msg)
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(Stage::Config, path, e))?;
        Self::from_toml(&text).map_err(|e| bad(format!("{}: {}", path.display(), e.message)))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn seeds(&self) -> Seeds {
        Seeds {
            wind: self.seed,
            noise: self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1),
            optimizer: self.seed.wrapping_mul(0xD1B5_4A32_D192_ED03).wrapping_add(2),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.wind_config()?;
        self.load_model()?;
        self.sensor_model()?;
        self.aero_section()?;
        self.snr_unit()?;
        self.channels()?;
        let m = &self.measurement;
        if !(m.snr > 0.0 && m.snr.is_finite()) {
            return Err(bad(format!("snr must be positive, got {}", m.snr)));
        }
        let t = &self.training;
        if !(t.dt_train >= self.wind.dt) {
            return Err(bad(format!(
                "dt_train {} must be at least the simulation step {}",
                t.dt_train, self.wind.dt
            )));
        }
        if !(t.hyper_window >= 0.0) {
            return Err(bad("hyper_window must be nonnegative"));
        }
        if self.optimizer.restarts == 0 {
            return Err(bad("optimizer.restarts must be at least 1"));
        }
        if !(self.optimizer.grad_tol > 0.0) || self.optimizer.max_iter == 0 {
            return Err(bad("optimizer tolerances must be positive"));
        }
        let p = &self.prediction;
        if !(p.dt >= 0.0) {
            return Err(bad("prediction.dt must be nonnegative"));
        }
        for (i, m) in self.structure.modes.iter().enumerate() {
            if !(m.amplitude_scale > 0.0) {
                return Err(bad(format!("mode {i}: amplitude_scale must be positive")));
            }
        }
        Ok(())
    }

    pub fn wind_config(&self) -> Result<WindConfig<f64>> {
        let w = &self.wind;
        let cfg = WindConfig {
            mean_speed: w.mean_speed,
            intensity_u: w.intensity_u,
            intensity_w: w.intensity_w,
            length_u: w.length_u,
            length_w: w.length_w,
            dt: w.dt,
            duration: w.duration,
            nodes: self.load_coords(),
            coherence_decay: w.coherence_decay,
        };
        cfg.validate().map_err(|e| bad(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load_coords(&self) -> Vec<f64> {
        let s = &self.structure;
        let n = s.load_nodes.max(2);
        (0..n).map(|i| s.span * i as f64 / (n - 1) as f64).collect()
    }

    pub fn sensor_coords(&self) -> Vec<f64> {
        let s = &self.structure;
        if !s.sensor_positions.is_empty() {
            return s.sensor_positions.clone();
        }
        let n = s.sensor_count;
        (1..=n).map(|i| s.span * i as f64 / (n + 1) as f64).collect()
    }

    fn mode_specs(&self) -> Result<Vec<ModeSpec>> {
        if self.structure.modes.is_empty() {
            return Err(bad("at least one mode is required"));
        }
        self.structure
            .modes
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let dof = Dof::parse(&m.dof)
                    .ok_or_else(|| bad(format!("mode {i}: unknown dof {:?}", m.dof)))?;
                Ok(ModeSpec {
                    freq_hz: m.freq_hz,
                    zeta: m.zeta,
                    dof,
                    half_waves: m.half_waves,
                })
            })
            .collect()
    }

    /// Mode shapes on the load grid.
    pub fn load_model(&self) -> Result<ModalModel<f64>> {
        let s = &self.structure;
        if s.load_nodes < 2 {
            return Err(bad("structure.load_nodes must be at least 2"));
        }
        ModalModel::synthetic(
            s.span,
            s.load_nodes,
            &self.mode_specs()?,
            s.mass_per_length,
            s.inertia_per_length,
        )
        .map_err(|e| bad(e.to_string()))
    }

    /// Mode shapes at the sensors.
    pub fn sensor_model(&self) -> Result<ModalModel<f64>> {
        let s = &self.structure;
        let xs = self.sensor_coords();
        if xs.is_empty() {
            return Err(bad("at least one sensor is required"));
        }
        if xs.iter().any(|&x| !(0.0..=s.span).contains(&x)) {
            return Err(bad("sensor positions must lie on the span"));
        }
        ModalModel::synthetic_on(s.span, xs, &self.mode_specs()?, s.mass_per_length, s.inertia_per_length)
            .map_err(|e| bad(e.to_string()))
    }

    pub fn aero_section(&self) -> Result<AeroSection<f64>> {
        let a = &self.aero;
        let sec = AeroSection {
            rho: a.rho,
            width: a.width,
            height: a.height,
            c_d: a.c_d,
            c_l: a.c_l,
            c_m: a.c_m,
            dc_l: a.dc_l,
            dc_m: a.dc_m,
            admittance_on: a.admittance,
        };
        sec.validate().map_err(|e| bad(e.to_string()))?;
        Ok(sec)
    }

    pub fn snr_unit(&self) -> Result<SnrUnit> {
        match self.measurement.snr_unit.to_ascii_lowercase().as_str() {
            "linear" => Ok(SnrUnit::Linear),
            "db" | "decibel" => Ok(SnrUnit::Decibel),
            other => Err(bad(format!("unknown snr_unit {other:?}"))),
        }
    }

    pub fn channels(&self) -> Result<Vec<Channel>> {
        if self.training.channels.is_empty() {
            return Err(bad("at least one training channel is required"));
        }
        let mut out = Vec::new();
        for name in &self.training.channels {
            let ch = Channel::parse(name)
                .filter(|c| *c != Channel::Force)
                .ok_or_else(|| bad(format!("unknown training channel {name:?}")))?;
            if !out.contains(&ch) {
                out.push(ch);
            }
        }
        Ok(out)
    }

    pub fn optimizer_config(&self, mode: usize) -> OptimizerConfig {
        OptimizerConfig {
            restarts: self.optimizer.restarts,
            seed: self.seeds().optimizer.wrapping_add(mode as u64),
            bfgs: BfgsOptions {
                max_iter: self.optimizer.max_iter,
                grad_tol: self.optimizer.grad_tol,
                ..BfgsOptions::default()
            },
        }
    }

    pub fn prediction_dt(&self) -> f64 {
        if self.prediction.dt > 0.0 {
            self.prediction.dt
        } else {
            self.wind.dt
        }
    }

    /// Mode indices after an optional `--modes` selection.
    pub fn select_modes(&self, selection: Option<&[usize]>) -> Result<Vec<usize>> {
        let n = self.structure.modes.len();
        match selection {
            None => Ok((0..n).collect()),
            Some(sel) => {
                if let Some(&bad_idx) = sel.iter().find(|&&i| i >= n) {
                    return Err(bad(format!("mode {bad_idx} selected but only {n} modes configured")));
                }
                let mut v = sel.to_vec();
                v.sort_unstable();
                v.dedup();
                Ok(v)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = RunConfig::default();
        c.validate().unwrap();
        let back = RunConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_file_takes_defaults() {
        let c = RunConfig::from_toml("seed = 7\n[wind]\nduration = 120.0\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.wind.duration, 120.0);
        assert_eq!(c.wind.mean_speed, 30.0);
        assert_eq!(c.structure.modes.len(), 4);
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            "[wind]\nduration = 0.0\n",
            "[measurement]\nsnr = -1.0\n",
            "[measurement]\nsnr_unit = \"bels\"\n",
            "[training]\nchannels = [\"force\"]\n",
            "[training]\ndt_train = 0.01\n",
            "[optimizer]\nrestarts = 0\n",
            "[structure]\nmodes = []\n",
            "[[structure.modes]]\ndof = \"sideways\"\n",
            "unknown_key = 1\n",
        ] {
            assert!(RunConfig::from_toml(text).is_err(), "{text}");
        }
    }

    #[test]
    fn seeds_are_distinct() {
        let s = RunConfig::default().seeds();
        assert!(s.wind != s.noise && s.noise != s.optimizer);
    }

    #[test]
    fn mode_selection() {
        let c = RunConfig::default();
        assert_eq!(c.select_modes(Some(&[2, 0, 2])).unwrap(), vec![0, 2]);
        assert!(c.select_modes(Some(&[9])).is_err());
    }
}
