use std::path::{Path, PathBuf};

use lfgp::{compare_signals, welch_psd, CompareOptions, PsdEstimate, TimeSeries};

use crate::error::{PipelineError, Result, Stage};
use crate::io::{fmt_f64, read_table, write_spectrum};
use crate::manifest::MetricRow;
use crate::reconstruct::posterior_file;
use crate::simulate::ModeData;

pub const METRICS_FILE: &str = "metrics.csv";

pub fn psd_file(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("psd_mode{index}.csv"))
}

/// Mode indices that have a posterior file in `dir`, ascending.
pub fn posterior_modes(dir: &Path) -> Result<Vec<usize>> {
    let entries = std::fs::read_dir(dir).map_err(|e| PipelineError::io(Stage::Metrics, dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| PipelineError::io(Stage::Metrics, dir, e))?;
        let name = entry.file_name();
        let name = name.to_string_lossy();
        if let Some(k) = name
            .strip_prefix("mode")
            .and_then(|s| s.strip_suffix("_posterior.csv"))
            .and_then(|s| s.parse::<usize>().ok())
        {
            out.push(k);
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Welch segment length: the largest power of two not above a quarter of
/// the record, capped at 4096 samples.
pub fn segment_len(n: usize) -> usize {
    let target = (n / 4).clamp(8, 4096);
    let mut s = 8;
    while s * 2 <= target {
        s *= 2;
    }
    s.min(n)
}

fn demeaned(x: &TimeSeries<f64>) -> TimeSeries<f64> {
    let mean = x.values.iter().sum::<f64>() / x.len() as f64;
    x.map(|v| v - mean)
}

/// One-sided Welch PSD of the demeaned series.
pub fn force_psd(x: &TimeSeries<f64>) -> Result<PsdEstimate<f64>> {
    welch_psd(&demeaned(x), segment_len(x.len()), 0.5).map_err(|e| PipelineError::from_core(Stage::Metrics, e))
}

/// Compares the true modal forces in `truth` with posterior means in `pred`.
///
/// `selection` restricts the modes; otherwise every posterior file in `pred`
/// is used. Writes `metrics.csv` and one PSD pair per mode into `out`.
pub fn metrics(truth: &Path, pred: &Path, out: &Path, selection: Option<&[usize]>) -> Result<Vec<MetricRow>> {
    let stage = Stage::Metrics;
    let modes = match selection {
        Some(s) => s.to_vec(),
        None => posterior_modes(pred)?,
    };
    if modes.is_empty() {
        return Err(PipelineError::config(stage, format!("{}: no posterior files found", pred.display())));
    }

    let mut rows = Vec::with_capacity(modes.len());
    for k in modes {
        let data = ModeData::read(stage, truth, k)?;
        let f_true = data.column(stage, "force")?;
        let post = read_table(stage, &posterior_file(pred, k))?;
        let f_pred = post
            .series("mean")
            .ok_or_else(|| PipelineError::config(stage, format!("mode {k}: posterior file has no `mean` column")))?;
        let tol = f_true.dt.max(f_pred.dt) * 0.5;
        if (f_true.t0 - f_pred.t0).abs() > tol || (f_true.t_end() - f_pred.t_end()).abs() > tol {
            return Err(PipelineError::config(
                stage,
                format!(
                    "mode {k}: length mismatch, truth covers [{}, {}] s but prediction covers [{}, {}] s",
                    f_true.t0,
                    f_true.t_end(),
                    f_pred.t0,
                    f_pred.t_end()
                ),
            ));
        }
        let f_pred = if f_pred.same_grid(&f_true) { f_pred } else { f_pred.resample_like(&f_true) };

        let report = compare_signals(&f_true, &f_pred, &CompareOptions::for_mode(data.freq_hz))
            .map_err(|e| PipelineError::from_core(stage, e))?;
        let p_true = force_psd(&f_true)?;
        let p_pred = force_psd(&f_pred)?;
        let meta = vec![
            ("quantity".to_string(), "one-sided Welch PSD of true and predicted modal force".to_string()),
            ("units".to_string(), "freq Hz, psd (modal force)^2 / Hz".to_string()),
            ("mode".to_string(), k.to_string()),
            ("freq_hz".to_string(), fmt_f64(data.freq_hz)),
            ("segment_len".to_string(), segment_len(f_true.len()).to_string()),
        ];
        write_spectrum(
            stage,
            &psd_file(out, k),
            &meta,
            &p_true.freqs,
            &[("psd_true", &p_true.psd), ("psd_pred", &p_pred.psd)],
        )?;
        rows.push(MetricRow {
            mode: k,
            freq_hz: data.freq_hz,
            m_rms: report.m_rms,
            m_mag: report.m_mag,
            m_phase: report.m_phase,
            m_peak: report.m_peak,
        });
    }
    write_metrics_table(out, &rows)?;
    Ok(rows)
}

pub fn write_metrics_table(out: &Path, rows: &[MetricRow]) -> Result<()> {
    let path = out.join(METRICS_FILE);
    let io_err = |e: csv::Error| PipelineError::io(Stage::Metrics, &path, e);
    std::fs::create_dir_all(out).map_err(|e| PipelineError::io(Stage::Metrics, out, e))?;
    let mut body = String::from("# quantity: similarity metrics between true and predicted modal force, 1 = identical\n");
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["mode", "freq_hz", "m_rms", "m_mag", "m_phase", "m_peak"]).map_err(io_err)?;
    for r in rows {
        w.write_record([
            r.mode.to_string(),
            fmt_f64(r.freq_hz),
            fmt_f64(r.m_rms),
            fmt_f64(r.m_mag),
            fmt_f64(r.m_phase),
            fmt_f64(r.m_peak),
        ])
        .map_err(io_err)?;
    }
    let bytes = w.into_inner().map_err(|e| PipelineError::io(Stage::Metrics, &path, e))?;
    body.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
    std::fs::write(&path, body).map_err(|e| PipelineError::io(Stage::Metrics, &path, e))
}

/// Reads `metrics.csv` back into rows.
pub fn read_metrics_table(path: &Path) -> Result<Vec<MetricRow>> {
    let stage = Stage::Metrics;
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| PipelineError::io(stage, path, e))?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| PipelineError::io(stage, path, e))?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| PipelineError::io(stage, path, format!("bad field {i}")))
        };
        rows.push(MetricRow {
            mode: num(0)? as usize,
            freq_hz: num(1)?,
            m_rms: num(2)?,
            m_mag: num(3)?,
            m_phase: num(4)?,
            m_peak: num(5)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_lengths() {
        assert_eq!(segment_len(12001), 2048);
        assert_eq!(segment_len(72000), 4096);
        assert_eq!(segment_len(100), 16);
        assert_eq!(segment_len(10), 8);
    }
}
