use std::path::Path;
use std::process::Command;

use lfgp::wind::TurbulenceField;
use lfgp_pipeline::io::{read_table, write_table};
use lfgp_pipeline::metrics::{psd_file, read_metrics_table, METRICS_FILE};
use lfgp_pipeline::reconstruct::posterior_file;
use lfgp_pipeline::simulate::{mode_file, simulate_field};
use lfgp_pipeline::windgen::{read_turbulence, WIND_U_FILE};
use lfgp_pipeline::{
    cmd_metrics, cmd_reconstruct, cmd_simulate, cmd_windgen, ErrorKind, RunConfig, RunManifest, Stage,
};

fn small_config(modes: usize, duration: f64) -> RunConfig {
    let all = [
        (0.052, "lateral"),
        (0.100, "vertical"),
        (0.278, "torsional"),
    ];
    let mut text = format!(
        "seed = 3\n[wind]\nduration = {duration}\n[structure]\nload_nodes = 21\nsensor_count = 7\n\
         [training]\nhyper_window = 0.0\n[optimizer]\nrestarts = 2\n"
    );
    for (f, dof) in &all[..modes] {
        text.push_str(&format!("[[structure.modes]]\nfreq_hz = {f}\ndof = \"{dof}\"\nhalf_waves = 1\n"));
    }
    RunConfig::from_toml(&text).unwrap()
}

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_lfgp"));
    c.env("RUST_LOG", "warn");
    c
}

fn write_config(dir: &Path, cfg: &RunConfig) -> std::path::PathBuf {
    let p = dir.join("run.toml");
    std::fs::write(&p, cfg.to_toml()).unwrap();
    p
}

#[test]
fn windgen_files_round_trip_to_the_same_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(1, 30.0);
    cmd_windgen(&cfg, dir.path()).unwrap();
    let back = read_turbulence(Stage::Simulate, dir.path()).unwrap();
    let direct = lfgp::synthesize_turbulence(&cfg.wind_config().unwrap(), cfg.seeds().wind).unwrap();
    assert_eq!(back, direct);
    let t = read_table(Stage::Simulate, &dir.path().join(WIND_U_FILE)).unwrap();
    assert_eq!(t.meta("seed"), Some(cfg.seeds().wind.to_string().as_str()));
    assert!(t.meta("mean_speed").is_some());
    assert_eq!(t.dt, cfg.wind.dt);
}

#[test]
fn zero_duration_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "[wind]\nduration = 0.0\n").unwrap();
    let out = bin()
        .args(["windgen", "--config"])
        .arg(dir.path().join("bad.toml"))
        .arg("--out")
        .arg(dir.path().join("w"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("[config]"));
}

#[test]
fn windgen_rerun_is_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = small_config(1, 20.0);
    cmd_windgen(&cfg, a.path()).unwrap();
    cmd_windgen(&cfg, b.path()).unwrap();
    for f in [WIND_U_FILE, lfgp_pipeline::windgen::WIND_W_FILE] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
    }
    let mut other = cfg.clone();
    other.seed += 1;
    let c = tempfile::tempdir().unwrap();
    cmd_windgen(&other, c.path()).unwrap();
    assert_ne!(std::fs::read(a.path().join(WIND_U_FILE)).unwrap(), std::fs::read(c.path().join(WIND_U_FILE)).unwrap());
}

#[test]
fn zero_turbulence_gives_zero_response() {
    let cfg = small_config(3, 60.0);
    let n = cfg.wind_config().unwrap().n_samples();
    let field = TurbulenceField::zeros(cfg.wind.mean_speed, cfg.load_coords(), cfg.wind.dt, n).unwrap();
    let sim = simulate_field(&cfg, &field).unwrap();
    for m in &sim.modes {
        for s in [&m.force, &m.clean.z, &m.clean.zdot, &m.clean.zddot] {
            assert!(s.values.iter().all(|v| v.abs() < 1e-12));
        }
    }
    for ch in &sim.sensors_clean {
        for s in ch {
            assert!(s.values.iter().all(|v| v.abs() < 1e-12));
        }
    }
}

#[test]
fn sensor_noise_matches_snr() {
    let cfg = small_config(3, 400.0);
    let field = lfgp::synthesize_turbulence(&cfg.wind_config().unwrap(), 11).unwrap();
    let sim = simulate_field(&cfg, &field).unwrap();
    let mut checked = 0;
    for (clean, noisy) in sim.sensors_clean.iter().zip(&sim.sensors_noisy) {
        for (c, y) in clean.iter().zip(noisy) {
            let rms = lfgp::scalar::rms(&c.values);
            if rms == 0.0 {
                continue;
            }
            let diff: Vec<f64> = y.values.iter().zip(&c.values).map(|(a, b)| a - b).collect();
            let sd = lfgp::scalar::std_dev(&diff);
            assert!((sd / (rms / 20.0) - 1.0).abs() < 0.05, "noise std {sd} vs {}", rms / 20.0);
            checked += 1;
        }
    }
    // 7 sensors x 3 active DOFs x 3 channels
    assert_eq!(checked, 7 * 3 * 3);
}

fn simulate_into(cfg: &RunConfig, root: &Path) -> (std::path::PathBuf, std::path::PathBuf) {
    let (wind, sim) = (root.join("wind"), root.join("sim"));
    cmd_windgen(cfg, &wind).unwrap();
    cmd_simulate(cfg, &wind, &sim).unwrap();
    (wind, sim)
}

#[test]
fn simulate_rerun_is_identical() {
    let root = tempfile::tempdir().unwrap();
    let cfg = small_config(2, 40.0);
    let (wind, sim) = simulate_into(&cfg, root.path());
    let again = root.path().join("sim2");
    cmd_simulate(&cfg, &wind, &again).unwrap();
    for f in ["mode0.csv", "mode1.csv", "sensors_clean.csv", "sensors_noisy.csv"] {
        assert_eq!(std::fs::read(sim.join(f)).unwrap(), std::fs::read(again.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn missing_channel_column_is_a_validation_error() {
    let root = tempfile::tempdir().unwrap();
    let cfg = small_config(1, 40.0);
    let (_, sim) = simulate_into(&cfg, root.path());
    let path = mode_file(&sim, 0);
    let mut t = read_table(Stage::Reconstruct, &path).unwrap();
    let k = t.names.iter().position(|n| n == "zddot_noisy").unwrap();
    t.names.remove(k);
    t.columns.remove(k);
    write_table(Stage::Simulate, &path, &t).unwrap();
    let err = cmd_reconstruct(&cfg, &sim, &root.path().join("recon"), None, None).unwrap_err();
    assert_eq!(err.kind, ErrorKind::Config);
    assert_eq!(err.stage, Stage::Reconstruct);
    assert!(err.message.contains("zddot_noisy"), "{err}");

    // The same file is fine when that channel is not requested.
    let mut two = cfg.clone();
    two.training.channels = vec!["z".into(), "zdot".into()];
    let m = cmd_reconstruct(&two, &sim, &root.path().join("recon"), None, None).unwrap();
    assert!(m.failed_modes().is_empty());
}

#[test]
fn toy_reconstruction_is_fast_and_reloaded_hyperparameters_reproduce_it() {
    let root = tempfile::tempdir().unwrap();
    let cfg = small_config(2, 60.0);
    let (_, sim) = simulate_into(&cfg, root.path());
    let first = root.path().join("recon");
    let start = std::time::Instant::now();
    let m = cmd_reconstruct(&cfg, &sim, &first, Some(&[1]), None).unwrap();
    assert!(start.elapsed().as_secs_f64() < 30.0);
    assert_eq!(m.modes.len(), 1);
    assert_eq!(m.modes[0].hyperparam_source.as_deref(), Some("optimized"));

    let mut frozen = cfg.clone();
    frozen.optimizer.enabled = false;
    let second = root.path().join("recon2");
    let m2 = cmd_reconstruct(&frozen, &sim, &second, Some(&[1]), Some(&first.join("manifest.json"))).unwrap();
    assert_eq!(m2.modes[0].hyperparam_source.as_deref(), Some("supplied"));
    assert_eq!(m2.modes[0].hyperparams, m.modes[0].hyperparams);
    assert_eq!(
        std::fs::read(posterior_file(&first, 1)).unwrap(),
        std::fs::read(posterior_file(&second, 1)).unwrap()
    );
}

#[test]
fn one_failed_mode_does_not_touch_the_others() {
    let root = tempfile::tempdir().unwrap();
    let cfg = small_config(2, 40.0);
    let (_, sim) = simulate_into(&cfg, root.path());
    let first = root.path().join("recon");
    cmd_reconstruct(&cfg, &sim, &first, Some(&[0]), None).unwrap();

    // Mode 1 has no stored hyperparameters and the optimizer is off.
    let mut frozen = cfg.clone();
    frozen.optimizer.enabled = false;
    let second = root.path().join("recon2");
    let m = cmd_reconstruct(&frozen, &sim, &second, None, Some(&first.join("manifest.json"))).unwrap();
    assert_eq!(m.failed_modes(), vec![1]);
    assert_eq!(m.modes[0].status, "ok");
    assert!(m.modes[1].error.as_deref().unwrap().starts_with("[reconstruct]"));
    assert_eq!(
        std::fs::read(posterior_file(&first, 0)).unwrap(),
        std::fs::read(posterior_file(&second, 0)).unwrap()
    );
    assert!(!posterior_file(&second, 1).exists());
}

/// Posterior files whose mean is the true force.
fn fake_posteriors(sim: &Path, pred: &Path, modes: usize) {
    std::fs::create_dir_all(pred).unwrap();
    for k in 0..modes {
        let truth = read_table(Stage::Metrics, &mode_file(sim, k)).unwrap();
        let f = truth.series("force").unwrap();
        let mut t = lfgp_pipeline::io::Table::new(f.t0, f.dt);
        t.push("mean", f.values.clone());
        t.push("std", vec![0.0; f.len()]);
        write_table(Stage::Reconstruct, &posterior_file(pred, k), &t).unwrap();
    }
}

#[test]
fn metrics_of_truth_against_itself_are_all_ones() {
    let root = tempfile::tempdir().unwrap();
    let cfg = small_config(3, 120.0);
    let (_, sim) = simulate_into(&cfg, root.path());
    let pred = root.path().join("pred");
    fake_posteriors(&sim, &pred, 3);
    let out = root.path().join("metrics");
    let m = cmd_metrics(&cfg, &sim, &pred, &out, None).unwrap();
    assert_eq!(m.metrics.len(), 3);
    let rows = read_metrics_table(&out.join(METRICS_FILE)).unwrap();
    assert_eq!(rows, m.metrics);
    for r in &rows {
        for v in [r.m_rms, r.m_mag, r.m_phase, r.m_peak] {
            assert!((v - 1.0).abs() < 1e-12, "{r:?}");
        }
    }

    // Each PSD integrates to the variance of its series; only about eight
    // segments fit in this record, so the bound is loose.
    for k in 0..3 {
        let f = read_table(Stage::Metrics, &mode_file(&sim, k)).unwrap().series("force").unwrap();
        let var = lfgp::scalar::std_dev(&f.values).powi(2);
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(psd_file(&out, k)).unwrap();
        let rows: Vec<(f64, f64)> = r
            .records()
            .map(|rec| {
                let rec = rec.unwrap();
                (rec[0].parse().unwrap(), rec[1].parse().unwrap())
            })
            .collect();
        let df = rows[1].0 - rows[0].0;
        let power: f64 = rows.iter().map(|r| r.1 * df).sum();
        assert!((power / var - 1.0).abs() < 0.2, "mode {k}: {power} vs {var}");
    }
}

#[test]
fn metrics_reject_mismatched_lengths() {
    let root = tempfile::tempdir().unwrap();
    let cfg = small_config(1, 60.0);
    let (_, sim) = simulate_into(&cfg, root.path());
    let pred = root.path().join("pred");
    fake_posteriors(&sim, &pred, 1);
    let path = posterior_file(&pred, 0);
    let mut t = read_table(Stage::Metrics, &path).unwrap();
    for c in &mut t.columns {
        c.truncate(c.len() / 2);
    }
    write_table(Stage::Reconstruct, &path, &t).unwrap();
    let err = cmd_metrics(&cfg, &sim, &pred, &root.path().join("m"), None).unwrap_err();
    assert_eq!(err.stage, Stage::Metrics);
    assert!(err.message.contains("length mismatch"), "{err}");
}

#[test]
fn desk_pipeline_exits_cleanly_with_three_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/desk.toml");
    let out = bin()
        .arg("pipeline")
        .arg("--config")
        .arg(&cfg_path)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_metrics_table(&dir.path().join("metrics").join(METRICS_FILE)).unwrap();
    assert_eq!(rows.len(), 3);
    let m = RunManifest::read(Stage::Metrics, &dir.path().join("manifest.json")).unwrap();
    assert_eq!(m.modes.len(), 3);
    assert_eq!(m.stages, ["windgen", "simulate", "reconstruct", "metrics"]);
    let mut expected = RunConfig::load(&cfg_path).unwrap();
    expected.output.dir = Some(dir.path().to_path_buf());
    assert_eq!(m.config, expected);
}

#[test]
fn corrupt_intermediate_file_is_reported_with_its_stage() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(1, 20.0);
    let cfg_path = write_config(dir.path(), &cfg);
    let wind = dir.path().join("wind");
    let st = bin().args(["windgen", "--config"]).arg(&cfg_path).arg("--out").arg(&wind).status().unwrap();
    assert!(st.success());
    let p = wind.join(WIND_U_FILE);
    let text = std::fs::read_to_string(&p).unwrap();
    std::fs::write(&p, text.replacen(",", ",oops", 40)).unwrap();
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&cfg_path)
        .arg("--input")
        .arg(&wind)
        .arg("--out")
        .arg(dir.path().join("sim"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("error: [simulate]"), "{err}");
}

#[test]
fn seed_flag_overrides_config_and_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(1, 10.0);
    let cfg_path = write_config(dir.path(), &cfg);
    let st = bin()
        .args(["windgen", "--seed", "99", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(dir.path().join("w"))
        .status()
        .unwrap();
    assert!(st.success());
    let m = RunManifest::read(Stage::Windgen, &dir.path().join("w").join("manifest.json")).unwrap();
    assert_eq!(m.config.seed, 99);
    assert_eq!(m.seeds.wind, 99);
}

#[test]
fn unknown_mode_selection_is_rejected() {
    let root = tempfile::tempdir().unwrap();
    let cfg = small_config(1, 20.0);
    let (_, sim) = simulate_into(&cfg, root.path());
    let err = cmd_reconstruct(&cfg, &sim, &root.path().join("r"), Some(&[4]), None).unwrap_err();
    assert_eq!(err.kind, ErrorKind::Config);
}
