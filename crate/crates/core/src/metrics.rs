//! Spectral estimation and normalized signal-comparison scores.
//!
//! The four scores are `exp(−normalized discrepancy)` measures of RMS,
//! envelope magnitude, instantaneous phase and absolute peak. Each is exactly
//! one for identical signals and decreases monotonically with the
//! discrepancy it measures.

use num_complex::Complex;

use crate::error::{domain, Result};
use crate::scalar::{fft_real, ifft, mean, rms, Real};
use crate::series::TimeSeries;

/// One-sided power spectral density.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdEstimate<T> {
    pub freqs: Vec<T>,
    pub psd: Vec<T>,
}

impl<T: Real> PsdEstimate<T> {
    pub fn df(&self) -> T {
        if self.freqs.len() < 2 {
            T::zero()
        } else {
            self.freqs[1] - self.freqs[0]
        }
    }

    /// `Σ psd · Δf`
    pub fn total_power(&self) -> T {
        self.psd.iter().copied().sum::<T>() * self.df()
    }

    /// Integrated power over bins with `lo ≤ f ≤ hi`.
    pub fn band_power(&self, lo: T, hi: T) -> T {
        self.freqs
            .iter()
            .zip(&self.psd)
            .filter(|(f, _)| **f >= lo && **f <= hi)
            .map(|(_, p)| *p)
            .sum::<T>()
            * self.df()
    }

    /// Density at the bin nearest to `f`.
    pub fn at(&self, f: T) -> T {
        let df = self.df();
        if df <= T::zero() {
            return self.psd[0];
        }
        let k = (f / df).round().to_usize().unwrap_or(0).min(self.psd.len() - 1);
        self.psd[k]
    }

    /// Mean density over bins with `lo ≤ f ≤ hi`.
    pub fn band_mean(&self, lo: T, hi: T) -> T {
        let sel: Vec<T> = self
            .freqs
            .iter()
            .zip(&self.psd)
            .filter(|(f, _)| **f >= lo && **f <= hi)
            .map(|(_, p)| *p)
            .collect();
        mean(&sel)
    }
}

/// Periodic Hann window.
fn hann<T: Real>(n: usize) -> Vec<T> {
    (0..n)
        .map(|i| T::of(0.5) * (T::one() - (T::TAU() * T::of_usize(i) / T::of_usize(n)).cos()))
        .collect()
}

struct Segments {
    starts: Vec<usize>,
    len: usize,
}

fn segments(n: usize, segment_len: usize, overlap: f64) -> Result<Segments> {
    if segment_len < 2 || segment_len > n {
        return domain(format!(
            "segment length {segment_len} must be in 2..={n} for a signal of {n} samples"
        ));
    }
    if !(0.0..1.0).contains(&overlap) {
        return domain(format!("overlap must lie in [0, 1), got {overlap}"));
    }
    let step = ((segment_len as f64 * (1.0 - overlap)).round() as usize).max(1);
    let starts = (0..=(n - segment_len)).step_by(step).collect();
    Ok(Segments {
        starts,
        len: segment_len,
    })
}

/// Welch cross-spectral density `S_xy` (one-sided, density scaling).
pub fn welch_csd<T: Real>(
    x: &TimeSeries<T>,
    y: &TimeSeries<T>,
    segment_len: usize,
    overlap: f64,
) -> Result<(Vec<T>, Vec<Complex<T>>)> {
    if x.len() != y.len() {
        return domain("cross spectrum needs equal-length signals");
    }
    let seg = segments(x.len(), segment_len, overlap)?;
    let w = hann::<T>(seg.len);
    let wss: T = w.iter().map(|&v| v * v).sum();
    let fs = x.sample_rate();
    let n_bins = seg.len / 2 + 1;
    let mut acc = vec![Complex::new(T::zero(), T::zero()); n_bins];
    for &s in &seg.starts {
        let xa: Vec<T> = (0..seg.len).map(|i| x.values[s + i] * w[i]).collect();
        let ya: Vec<T> = (0..seg.len).map(|i| y.values[s + i] * w[i]).collect();
        let fx = fft_real(&xa);
        let fy = fft_real(&ya);
        for k in 0..n_bins {
            acc[k] = acc[k] + fx[k].conj() * fy[k];
        }
    }
    let norm = T::one() / (fs * wss * T::of_usize(seg.starts.len()));
    let two = T::of(2.0);
    let mut out: Vec<Complex<T>> = acc.into_iter().map(|c| c * norm).collect();
    for (k, c) in out.iter_mut().enumerate() {
        let nyquist = seg.len % 2 == 0 && k == seg.len / 2;
        if k != 0 && !nyquist {
            *c = *c * two;
        }
    }
    let df = fs / T::of_usize(seg.len);
    let freqs = (0..n_bins).map(|k| df * T::of_usize(k)).collect();
    Ok((freqs, out))
}

/// Hann-windowed averaged periodogram.
pub fn welch_psd<T: Real>(x: &TimeSeries<T>, segment_len: usize, overlap: f64) -> Result<PsdEstimate<T>> {
    let (freqs, csd) = welch_csd(x, x, segment_len, overlap)?;
    Ok(PsdEstimate {
        freqs,
        psd: csd.into_iter().map(|c| c.re.max(T::zero())).collect(),
    })
}

/// Magnitude of the Welch root-coherence `|S_xy| / sqrt(S_xx S_yy)`.
pub fn coherence_estimate<T: Real>(
    x: &TimeSeries<T>,
    y: &TimeSeries<T>,
    segment_len: usize,
    overlap: f64,
) -> Result<(Vec<T>, Vec<T>)> {
    let (freqs, sxy) = welch_csd(x, y, segment_len, overlap)?;
    let (_, sxx) = welch_csd(x, x, segment_len, overlap)?;
    let (_, syy) = welch_csd(y, y, segment_len, overlap)?;
    let coh = (0..freqs.len())
        .map(|k| {
            let den = (sxx[k].re * syy[k].re).sqrt();
            if den > T::zero() {
                (sxy[k].norm() / den).min(T::one())
            } else {
                T::zero()
            }
        })
        .collect();
    Ok((freqs, coh))
}

/// Analytic signal, optionally restricted to `lo ≤ f ≤ hi` (zero-phase,
/// brick-wall in the frequency domain).
pub fn analytic<T: Real>(x: &TimeSeries<T>, band: Option<(T, T)>) -> Vec<Complex<T>> {
    let n = x.len();
    let mut spec = fft_real(&x.values);
    let df = T::one() / (T::of_usize(n) * x.dt);
    let two = T::of(2.0);
    for (k, c) in spec.iter_mut().enumerate() {
        let positive = k > 0 && 2 * k < n;
        let nyquist = n.is_multiple_of(2) && k == n / 2 && k > 0;
        let gain = if k == 0 || nyquist {
            T::one()
        } else if positive {
            two
        } else {
            T::zero()
        };
        let keep = match band {
            None => true,
            Some((lo, hi)) => {
                let f = df * T::of_usize(k);
                k > 0 && f >= lo && f <= hi
            }
        };
        *c = if keep { *c * gain } else { Complex::new(T::zero(), T::zero()) };
    }
    ifft(&spec)
}

/// In-place phase unwrapping.
pub fn unwrap_phase<T: Real>(phase: &mut [T]) {
    let tau = T::TAU();
    let pi = T::PI();
    let mut offset = T::zero();
    for i in 1..phase.len() {
        let raw = phase[i] + offset;
        let mut d = raw - phase[i - 1];
        while d > pi {
            offset -= tau;
            d -= tau;
        }
        while d < -pi {
            offset += tau;
            d += tau;
        }
        phase[i] += offset;
    }
}

/// Envelope and unwrapped instantaneous phase of the analytic signal.
pub fn analytic_signal<T: Real>(x: &TimeSeries<T>) -> (TimeSeries<T>, TimeSeries<T>) {
    let a = analytic(x, None);
    let env = a.iter().map(|c| c.norm()).collect();
    let mut ph: Vec<T> = a.iter().map(|c| c.arg()).collect();
    unwrap_phase(&mut ph);
    (x.with_values(env), x.with_values(ph))
}

/// Scores in `[0, 1]`; one means perfect correspondence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport<T> {
    pub m_rms: T,
    pub m_mag: T,
    pub m_phase: T,
    pub m_peak: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareOptions<T> {
    /// Band for the phase comparison; `None` uses the full band.
    pub phase_band: Option<(T, T)>,
    /// Fraction of samples dropped at each end for the envelope and phase scores.
    pub edge_fraction: f64,
}

impl<T: Real> Default for CompareOptions<T> {
    fn default() -> Self {
        Self {
            phase_band: None,
            edge_fraction: 0.1,
        }
    }
}

impl<T: Real> CompareOptions<T> {
    /// Phase band `[0.25 fₙ, 4 fₙ]` around a mode's natural frequency.
    pub fn for_mode(f_n: T) -> Self {
        Self {
            phase_band: Some((T::of(0.25) * f_n, T::of(4.0) * f_n)),
            edge_fraction: 0.1,
        }
    }
}

fn wrap_pi<T: Real>(x: T) -> T {
    let tau = T::TAU();
    let mut y = x % tau;
    if y > T::PI() {
        y -= tau;
    } else if y <= -T::PI() {
        y += tau;
    }
    y
}

/// Compares a predicted signal against the truth. `pred` is linearly
/// resampled onto the truth grid when the grids differ.
pub fn compare_signals<T: Real>(
    truth: &TimeSeries<T>,
    pred: &TimeSeries<T>,
    opts: &CompareOptions<T>,
) -> Result<MetricReport<T>> {
    let pred = if pred.same_grid(truth) {
        pred.clone()
    } else {
        pred.resample_like(truth)
    };
    let rt = rms(&truth.values);
    if !(rt > T::zero()) {
        return domain("truth signal has zero RMS");
    }
    let rp = rms(&pred.values);
    let m_rms = (-(rp - rt).abs() / rt).exp();

    let peak = |v: &[T]| v.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    let (pt, pp) = (peak(&truth.values), peak(&pred.values));
    let m_peak = (-(pp - pt).abs() / pt).exp();

    let n = truth.len();
    let cut = ((n as f64) * opts.edge_fraction).floor() as usize;
    let (lo, hi) = if 2 * cut < n { (cut, n - cut) } else { (0, n) };

    let at = analytic(truth, None);
    let ap = analytic(&pred, None);
    let env_t: Vec<T> = at[lo..hi].iter().map(|c| c.norm()).collect();
    let env_p: Vec<T> = ap[lo..hi].iter().map(|c| c.norm()).collect();
    let diff: Vec<T> = env_t.iter().zip(&env_p).map(|(a, b)| (*a - *b).abs()).collect();
    let mt = mean(&env_t);
    let m_mag = if mt > T::zero() {
        (-mean(&diff) / mt).exp()
    } else {
        T::zero()
    };

    let bt = analytic(truth, opts.phase_band);
    let bp = analytic(&pred, opts.phase_band);
    let dphi: Vec<T> = (lo..hi)
        .map(|i| wrap_pi(bp[i].arg() - bt[i].arg()).abs())
        .collect();
    let m_phase = (-mean(&dphi) / T::PI()).exp();

    Ok(MetricReport {
        m_rms,
        m_mag,
        m_phase,
        m_peak,
    })
}
