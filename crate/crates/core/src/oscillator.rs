//! Ground-truth structural responses: Newmark integration of the modal
//! equation, measurement noise, global/modal coordinate transforms and
//! training-point decimation.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{domain, Error, Result};
use crate::gp::{Observation, TrainingSet};
use crate::kernels::{Channel, OscillatorParams};
use crate::linalg::{least_squares, Matrix};
use crate::scalar::{rms, Real};
use crate::series::TimeSeries;

/// Newmark-β coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Newmark<T> {
    pub gamma: T,
    pub beta: T,
}

impl<T: Real> Newmark<T> {
    /// γ = 1/2, β = 1/4.
    pub fn average_acceleration() -> Self {
        Self {
            gamma: T::of(0.5),
            beta: T::of(0.25),
        }
    }
}

impl<T: Real> Default for Newmark<T> {
    fn default() -> Self {
        Self::average_acceleration()
    }
}

/// Displacement, velocity and acceleration on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Response<T> {
    pub z: TimeSeries<T>,
    pub zdot: TimeSeries<T>,
    pub zddot: TimeSeries<T>,
}

impl<T: Real> Response<T> {
    pub fn channel(&self, ch: Channel) -> Option<&TimeSeries<T>> {
        match ch {
            Channel::Displacement => Some(&self.z),
            Channel::Velocity => Some(&self.zdot),
            Channel::Acceleration => Some(&self.zddot),
            Channel::Force => None,
        }
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            z: self.z.scaled(s),
            zdot: self.zdot.scaled(s),
            zddot: self.zddot.scaled(s),
        }
    }

    /// Reconstructs `m z̈ + c ż + k_s z` sample by sample.
    pub fn implied_force(&self, osc: &OscillatorParams<T>) -> TimeSeries<T> {
        let (m, c, k) = (osc.mass, osc.damping(), osc.stiffness());
        let vals = (0..self.z.len())
            .map(|i| m * self.zddot.values[i] + c * self.zdot.values[i] + k * self.z.values[i])
            .collect();
        self.z.with_values(vals)
    }
}

/// Integrates `m z̈ + c ż + k_s z = F(t)` on the force's sampling grid.
pub fn newmark_response<T: Real>(
    osc: &OscillatorParams<T>,
    force: &TimeSeries<T>,
    scheme: Newmark<T>,
    z0: T,
    v0: T,
) -> Result<Response<T>> {
    osc.validate()?;
    let dt = force.dt;
    if !(dt > T::zero()) {
        return domain(format!("time step must be positive, got {dt}"));
    }
    if !(scheme.beta > T::zero() && scheme.gamma >= T::zero()) {
        return domain("Newmark requires beta > 0 and gamma >= 0");
    }
    let (m, c, k) = (osc.mass, osc.damping(), osc.stiffness());
    let (g, b) = (scheme.gamma, scheme.beta);
    let n = force.len();
    let f = &force.values;
    let mut z = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    let mut a = Vec::with_capacity(n);
    z.push(z0);
    v.push(v0);
    a.push((f[0] - c * v0 - k * z0) / m);
    let eff = m + g * dt * c + b * dt * dt * k;
    let half = T::of(0.5);
    for i in 1..n {
        let zp = z[i - 1] + dt * v[i - 1] + dt * dt * (half - b) * a[i - 1];
        let vp = v[i - 1] + dt * (T::one() - g) * a[i - 1];
        let an = (f[i] - c * vp - k * zp) / eff;
        z.push(zp + b * dt * dt * an);
        v.push(vp + g * dt * an);
        a.push(an);
    }
    Ok(Response {
        z: force.with_values(z),
        zdot: force.with_values(v),
        zddot: force.with_values(a),
    })
}

/// Mechanical admittance `H(ω) = 1 / (k_s − mω² + i c ω)`.
pub fn mechanical_admittance<T: Real>(osc: &OscillatorParams<T>, omega: T) -> Complex<T> {
    let den = Complex::new(osc.stiffness() - osc.mass * omega * omega, osc.damping() * omega);
    Complex::new(T::one(), T::zero()) / den
}

/// How an SNR figure is to be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SnrUnit {
    /// Ratio of signal RMS to noise standard deviation.
    #[default]
    Linear,
    /// `20 log₁₀(RMS / σ_noise)`.
    Decibel,
}

/// RMS-to-noise-std ratio implied by an SNR value.
pub fn snr_amplitude_ratio(snr: f64, unit: SnrUnit) -> f64 {
    match unit {
        SnrUnit::Linear => snr,
        SnrUnit::Decibel => 10f64.powf(snr / 20.0),
    }
}

/// Adds i.i.d. zero-mean Gaussian noise with the given standard deviation.
pub fn add_noise_std<T: Real>(signal: &TimeSeries<T>, std: T, rng: &mut ChaCha8Rng) -> TimeSeries<T> {
    signal.map(|v| {
        let e: f64 = StandardNormal.sample(rng);
        v + std * T::of(e)
    })
}

/// Adds white Gaussian noise with `σ = RMS(signal) / SNR`, deterministic in `seed`.
pub fn add_noise_snr<T: Real>(
    signal: &TimeSeries<T>,
    snr: f64,
    unit: SnrUnit,
    seed: u64,
) -> Result<TimeSeries<T>> {
    if signal.is_empty() {
        return domain("cannot add noise to an empty signal");
    }
    let ratio = snr_amplitude_ratio(snr, unit);
    if !(ratio > 0.0 && ratio.is_finite()) {
        return domain(format!("SNR must be positive, got {snr}"));
    }
    let std = rms(&signal.values) / T::of(ratio);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(add_noise_std(signal, std, &mut rng))
}

/// Global degree of freedom a mode acts in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dof {
    /// Horizontal sway (`p`, drag direction).
    Lateral = 0,
    /// Vertical bending (`h`, lift direction).
    Vertical = 1,
    /// Torsion (`α`, pitching moment).
    Torsional = 2,
}

impl Dof {
    pub const ALL: [Dof; 3] = [Dof::Lateral, Dof::Vertical, Dof::Torsional];

    pub fn symbol(self) -> &'static str {
        match self {
            Dof::Lateral => "p",
            Dof::Vertical => "h",
            Dof::Torsional => "alpha",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lateral" | "sway" | "p" => Some(Dof::Lateral),
            "vertical" | "bending" | "h" => Some(Dof::Vertical),
            "torsional" | "torsion" | "alpha" => Some(Dof::Torsional),
            _ => None,
        }
    }
}

/// Number of global DOFs per deck node.
pub const DOFS_PER_NODE: usize = 3;

/// Row of a node/DOF pair in the global response vector.
pub fn global_index(node: usize, dof: Dof) -> usize {
    node * DOFS_PER_NODE + dof as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MassConvention {
    /// Shapes scaled so every modal mass is exactly one.
    MassNormalized,
    /// Shapes carry arbitrary scaling; `OscillatorParams::mass` holds the modal mass.
    Explicit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mode<T> {
    pub osc: OscillatorParams<T>,
    pub dof: Dof,
    /// Shape ordinates at the model's nodes.
    pub shape: Vec<T>,
}

/// Description of one synthetic half-wave mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSpec {
    pub freq_hz: f64,
    pub zeta: f64,
    pub dof: Dof,
    pub half_waves: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModalModel<T> {
    pub modes: Vec<Mode<T>>,
    pub node_coords: Vec<T>,
    pub convention: MassConvention,
}

impl<T: Real> ModalModel<T> {
    pub fn new(modes: Vec<Mode<T>>, node_coords: Vec<T>, convention: MassConvention) -> Result<Self> {
        if node_coords.is_empty() {
            return domain("modal model needs at least one node");
        }
        if node_coords.windows(2).any(|w| !(w[1] > w[0])) {
            return domain("node coordinates must be strictly increasing");
        }
        for (i, m) in modes.iter().enumerate() {
            m.osc.validate()?;
            if m.shape.len() != node_coords.len() {
                return domain(format!(
                    "mode {i} has {} shape samples for {} nodes",
                    m.shape.len(),
                    node_coords.len()
                ));
            }
            if convention == MassConvention::MassNormalized && (m.osc.mass - T::one()).abs() > T::of(1e-12) {
                return domain(format!("mode {i}: mass-normalized model requires unit modal mass"));
            }
        }
        Ok(Self {
            modes,
            node_coords,
            convention,
        })
    }

    /// Half-sine shapes `φ(x) = √(2/(μL)) sin(nπx/L)` on `n_nodes` equally
    /// spaced nodes over `[0, span]`, mass-normalized with `μ` the mass (or
    /// mass moment of inertia for torsion) per unit length.
    pub fn synthetic(
        span: f64,
        n_nodes: usize,
        specs: &[ModeSpec],
        mass_per_length: f64,
        inertia_per_length: f64,
    ) -> Result<Self> {
        if n_nodes < 2 {
            return domain("synthetic model needs at least two nodes");
        }
        let xs: Vec<f64> = (0..n_nodes)
            .map(|i| span * i as f64 / (n_nodes - 1) as f64)
            .collect();
        Self::synthetic_on(span, xs, specs, mass_per_length, inertia_per_length)
    }

    /// Same shapes as [`ModalModel::synthetic`] sampled at arbitrary
    /// positions, e.g. a sparse sensor layout.
    pub fn synthetic_on(
        span: f64,
        xs: Vec<f64>,
        specs: &[ModeSpec],
        mass_per_length: f64,
        inertia_per_length: f64,
    ) -> Result<Self> {
        if !(span > 0.0) {
            return domain("synthetic model needs a positive span");
        }
        if !(mass_per_length > 0.0 && inertia_per_length > 0.0) {
            return domain("mass and inertia per length must be positive");
        }
        let mut modes = Vec::with_capacity(specs.len());
        for s in specs {
            if s.half_waves == 0 {
                return domain("mode needs at least one half wave");
            }
            let mu = if s.dof == Dof::Torsional {
                inertia_per_length
            } else {
                mass_per_length
            };
            let amp = (2.0 / (mu * span)).sqrt();
            let shape = xs
                .iter()
                .map(|&x| T::of(amp * (s.half_waves as f64 * std::f64::consts::PI * x / span).sin()))
                .collect();
            modes.push(Mode {
                osc: OscillatorParams::from_hz(T::one(), T::of(s.zeta), T::of(s.freq_hz))?,
                dof: s.dof,
                shape,
            });
        }
        Self::new(
            modes,
            xs.into_iter().map(T::of).collect(),
            MassConvention::MassNormalized,
        )
    }

    pub fn n_nodes(&self) -> usize {
        self.node_coords.len()
    }

    pub fn n_global(&self) -> usize {
        self.n_nodes() * DOFS_PER_NODE
    }

    /// Global-DOF × mode matrix of shape ordinates.
    pub fn shape_matrix(&self) -> Matrix<T> {
        let mut phi = Matrix::zeros(self.n_global(), self.modes.len());
        for (j, m) in self.modes.iter().enumerate() {
            for (node, &v) in m.shape.iter().enumerate() {
                phi[(global_index(node, m.dof), j)] = v;
            }
        }
        phi
    }

    /// Keeps only the listed modes, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut modes = Vec::with_capacity(indices.len());
        for &i in indices {
            modes.push(
                self.modes
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::Domain(format!("mode index {i} out of range")))?,
            );
        }
        Self::new(modes, self.node_coords.clone(), self.convention)
    }
}

fn check_common_grid<T: Real>(series: &[TimeSeries<T>]) -> Result<()> {
    if let Some(first) = series.first() {
        if series.iter().any(|s| !s.same_grid(first)) {
            return domain("all series must share the same time grid");
        }
    }
    Ok(())
}

fn stack<T: Real>(series: &[TimeSeries<T>]) -> Matrix<T> {
    let n_t = series[0].len();
    Matrix::from_fn(series.len(), n_t, |i, k| series[i].values[k])
}

/// Least-squares projection of global responses (one series per global DOF,
/// ordered by [`global_index`]) onto the mode shapes at every time step.
pub fn modal_decompose<T: Real>(
    global: &[TimeSeries<T>],
    model: &ModalModel<T>,
) -> Result<Vec<TimeSeries<T>>> {
    if global.len() != model.n_global() {
        return domain(format!(
            "expected {} global series ({} nodes × {DOFS_PER_NODE} DOFs), got {}",
            model.n_global(),
            model.n_nodes(),
            global.len()
        ));
    }
    if model.modes.is_empty() {
        return domain("modal model has no modes");
    }
    check_common_grid(global)?;
    let q = least_squares(&model.shape_matrix(), &stack(global))?;
    Ok((0..q.rows())
        .map(|j| global[0].with_values(q.row(j).to_vec()))
        .collect())
}

/// Global responses `Φ q(t)` from modal coordinates.
pub fn modal_superpose<T: Real>(
    modal: &[TimeSeries<T>],
    model: &ModalModel<T>,
) -> Result<Vec<TimeSeries<T>>> {
    if modal.len() != model.modes.len() || modal.is_empty() {
        return domain(format!(
            "expected {} modal series, got {}",
            model.modes.len(),
            modal.len()
        ));
    }
    check_common_grid(modal)?;
    let g = model.shape_matrix().matmul(&stack(modal));
    Ok((0..g.rows())
        .map(|r| modal[0].with_values(g.row(r).to_vec()))
        .collect())
}

/// Picks the nearest samples to `t0, t0 + Δt_train, …` for each requested
/// channel.
pub fn subsample_training<T: Real>(
    responses: &Response<T>,
    dt_train: T,
    channels: &[Channel],
) -> Result<TrainingSet<T>> {
    let src = &responses.z;
    if !(dt_train > T::zero()) || dt_train < src.dt * (T::one() - T::of(1e-9)) {
        return domain(format!(
            "training interval {dt_train} must be at least the sampling interval {}",
            src.dt
        ));
    }
    if channels.is_empty() {
        return domain("at least one training channel is required");
    }
    let span = src.t_end() - src.t0;
    let count = (span / dt_train + T::of(1e-9)).floor().to_usize().unwrap_or(0) + 1;
    let mut picks: Vec<usize> = (0..count)
        .map(|k| {
            let pos = T::of_usize(k) * dt_train / src.dt;
            pos.round().to_usize().unwrap_or(0).min(src.len() - 1)
        })
        .collect();
    picks.dedup();
    let mut entries = Vec::with_capacity(picks.len() * channels.len());
    for &ch in channels {
        let series = responses
            .channel(ch)
            .ok_or_else(|| Error::Domain(format!("{ch} is not a trainable response channel")))?;
        for &i in &picks {
            entries.push(Observation {
                time: series.time(i),
                value: series.values[i],
                channel: ch,
            });
        }
    }
    TrainingSet::new(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn static_limit() {
        let osc = OscillatorParams::new(1.0, 0.5, 2.0).unwrap();
        let f = TimeSeries::from_fn(0.0, 0.01, 5000, |_: f64| osc.stiffness()).unwrap();
        let r = newmark_response(&osc, &f, Newmark::default(), 0.0, 0.0).unwrap();
        assert!((r.z.values.last().unwrap() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn equilibrium_residual_is_tiny() {
        let osc = OscillatorParams::from_hz(2.5, 0.02, 0.3).unwrap();
        let f = TimeSeries::from_fn(0.0, 0.05, 2000, |t: f64| (0.7 * t).sin() + 0.3 * (2.1 * t).cos()).unwrap();
        let r = newmark_response(&osc, &f, Newmark::default(), 0.1, -0.2).unwrap();
        let back = r.implied_force(&osc);
        let fmax = f.values.iter().fold(0.0f64, |m, v: &f64| m.max(v.abs()));
        for (a, b) in back.values.iter().zip(&f.values) {
            assert!((*a - *b).abs() <= 1e-9 * fmax);
        }
    }

    #[test]
    fn free_decay_log_decrement() {
        let zeta = 0.03;
        let osc = OscillatorParams::new(1.0, zeta, 2.0 * std::f64::consts::PI).unwrap();
        let wd = osc.omega_n * (1.0f64 - zeta * zeta).sqrt();
        let td = 2.0 * std::f64::consts::PI / wd;
        let dt = td / 2000.0;
        let f = TimeSeries::zeros(0.0, dt, 8001).unwrap();
        let r = newmark_response(&osc, &f, Newmark::default(), 1.0, 0.0).unwrap();
        // Peaks of a damped cosine start near t = 0; compare successive maxima.
        let peak = |from: usize, to: usize| r.z.values[from..to].iter().cloned().fold(f64::MIN, f64::max);
        let p1 = peak(1000, 3000);
        let p2 = peak(3000, 5000);
        let expect = (-2.0 * std::f64::consts::PI * zeta / (1.0 - zeta * zeta).sqrt()).exp();
        assert_relative_eq!(p2 / p1, expect, max_relative = 0.01);
    }

    #[test]
    fn resonant_amplitude() {
        let zeta = 0.05;
        let osc = OscillatorParams::new(1.0, zeta, 1.0).unwrap();
        let dt = 0.02;
        let n = (600.0 / dt) as usize;
        let f = TimeSeries::from_fn(0.0, dt, n, |t: f64| t.sin()).unwrap();
        let r = newmark_response(&osc, &f, Newmark::default(), 0.0, 0.0).unwrap();
        let tail = &r.z.values[n - (20.0 * std::f64::consts::PI / dt) as usize..];
        let amp = tail.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let expect = 1.0 / (2.0 * zeta * osc.stiffness() * (1.0 - zeta * zeta).sqrt());
        assert_relative_eq!(amp, expect, max_relative = 0.02);
    }

    #[test]
    fn undamped_energy_conserved() {
        let osc = OscillatorParams::new(2.0, 0.0, 3.0).unwrap();
        let period = 2.0 * std::f64::consts::PI / 3.0;
        let dt = period / 50.0;
        let f = TimeSeries::zeros(0.0, dt, 100 * 50 + 1).unwrap();
        let r = newmark_response(&osc, &f, Newmark::default(), 0.5, 0.7).unwrap();
        let energy = |i: usize| 0.5 * osc.mass * r.zdot.values[i].powi(2) + 0.5 * osc.stiffness() * r.z.values[i].powi(2);
        let e0 = energy(0);
        for i in 0..f.len() {
            assert!((energy(i) - e0).abs() <= 1e-3 * e0);
        }
    }

    #[test]
    fn noise_limits_and_determinism() {
        let s = TimeSeries::from_fn(0.0, 0.1, 500, |t: f64| t.sin()).unwrap();
        let same = add_noise_snr(&s, 1e12, SnrUnit::Linear, 1).unwrap();
        for (a, b) in s.values.iter().zip(&same.values) {
            assert!((*a - *b).abs() < 1e-11);
        }
        let a = add_noise_snr(&s, 20.0, SnrUnit::Linear, 9).unwrap();
        let b = add_noise_snr(&s, 20.0, SnrUnit::Linear, 9).unwrap();
        assert_eq!(a, b);
        assert!(add_noise_snr(&s, 0.0, SnrUnit::Linear, 9).is_err());
        assert!(add_noise_snr(&s, -3.0, SnrUnit::Linear, 9).is_err());
        assert_relative_eq!(snr_amplitude_ratio(20.0, SnrUnit::Decibel), 10.0, max_relative = 1e-12);
    }

    #[test]
    fn noise_std_monte_carlo() {
        let n = 100_000;
        let s = TimeSeries::from_fn(0.0, 0.01, n, |t: f64| std::f64::consts::SQRT_2 * (3.0 * t).sin()).unwrap();
        let r = rms(&s.values);
        let noisy = add_noise_snr(&s, 20.0, SnrUnit::Linear, 4).unwrap();
        let diff: Vec<f64> = noisy.values.iter().zip(&s.values).map(|(a, b)| a - b).collect();
        let sd = crate::scalar::std_dev(&diff);
        assert_relative_eq!(sd, r / 20.0, max_relative = 0.05);
        // Whiteness: sample autocorrelation small at nonzero lags.
        let var: f64 = diff.iter().map(|v| v * v).sum::<f64>();
        let bound = 3.0 / (n as f64).sqrt();
        for lag in 1..30 {
            let c: f64 = diff.iter().zip(&diff[lag..]).map(|(a, b)| a * b).sum::<f64>() / var;
            assert!(c.abs() <= bound, "lag {lag}: {c}");
        }
    }

    fn sine_model(nodes: usize, specs: &[ModeSpec]) -> ModalModel<f64> {
        ModalModel::synthetic(1000.0, nodes, specs, 1.0, 1.0).unwrap()
    }

    fn spec(freq_hz: f64, dof: Dof, half_waves: u32) -> ModeSpec {
        ModeSpec {
            freq_hz,
            zeta: 0.01,
            dof,
            half_waves,
        }
    }

    #[test]
    fn decompose_superpose_round_trip() {
        let model = sine_model(
            11,
            &[
                spec(0.1, Dof::Vertical, 1),
                spec(0.2, Dof::Vertical, 2),
                spec(0.05, Dof::Lateral, 1),
                spec(0.3, Dof::Torsional, 1),
            ],
        );
        let q: Vec<TimeSeries<f64>> = (0..4)
            .map(|j| TimeSeries::from_fn(0.0, 0.1, 50, |t| (t * (j + 1) as f64).cos()).unwrap())
            .collect();
        let g = modal_superpose(&q, &model).unwrap();
        assert_eq!(g.len(), 33);
        let back = modal_decompose(&g, &model).unwrap();
        for (a, b) in q.iter().zip(&back) {
            for (x, y) in a.values.iter().zip(&b.values) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn single_half_sine_exact_recovery() {
        let model = sine_model(21, &[spec(0.1, Dof::Vertical, 1)]);
        let q = vec![TimeSeries::from_fn(0.0, 0.05, 100, |t: f64| t.cos()).unwrap()];
        let g = modal_superpose(&q, &model).unwrap();
        // Midspan of the first bending mode equals the shape ordinate there.
        let mid = global_index(10, Dof::Vertical);
        assert_relative_eq!(g[mid].values[0], model.modes[0].shape[10], max_relative = 1e-14);
        let back = modal_decompose(&g, &model).unwrap();
        for (x, y) in q[0].values.iter().zip(&back[0].values) {
            assert!((x - y).abs() < 1e-10);
        }
        let zero = vec![TimeSeries::zeros(0.0, 0.05, 10).unwrap()];
        assert!(modal_superpose(&zero, &model).unwrap().iter().all(|s| s.values.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn decompose_rejects_bad_inputs() {
        let model = sine_model(5, &[spec(0.1, Dof::Vertical, 1)]);
        let g = vec![TimeSeries::zeros(0.0, 0.1, 4).unwrap(); 4];
        assert!(modal_decompose(&g, &model).is_err());
        // Two identical shapes: rank deficient.
        let dup = sine_model(5, &[spec(0.1, Dof::Vertical, 1), spec(0.2, Dof::Vertical, 1)]);
        let g = vec![TimeSeries::zeros(0.0, 0.1, 4).unwrap(); 15];
        assert!(matches!(modal_decompose(&g, &dup), Err(Error::Domain(_))));
    }

    #[test]
    fn noisy_projection_residual_nonnegative() {
        let model = sine_model(15, &[spec(0.1, Dof::Vertical, 1), spec(0.2, Dof::Vertical, 2)]);
        let q: Vec<TimeSeries<f64>> = (0..2)
            .map(|j| TimeSeries::from_fn(0.0, 0.1, 200, |t| (t * (j + 1) as f64).sin()).unwrap())
            .collect();
        let clean = modal_superpose(&q, &model).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noisy: Vec<_> = clean.iter().map(|s| add_noise_std(s, 1e-3, &mut rng)).collect();
        let qh = modal_decompose(&noisy, &model).unwrap();
        let refit = modal_superpose(&qh, &model).unwrap();
        let mut resid = 0.0;
        let mut noise_pow = 0.0;
        for i in 0..noisy.len() {
            for k in 0..200 {
                resid += (noisy[i].values[k] - refit[i].values[k]).powi(2);
                noise_pow += (noisy[i].values[k] - clean[i].values[k]).powi(2);
            }
        }
        assert!(resid >= 0.0 && resid <= noise_pow);
    }

    #[test]
    fn subsample_counts() {
        let s = TimeSeries::from_fn(0.0, 0.05, 1201, |t| t).unwrap();
        let resp = Response {
            z: s.clone(),
            zdot: s.clone(),
            zddot: s.clone(),
        };
        let ts = subsample_training(&resp, 1.25, &Channel::RESPONSES).unwrap();
        assert_eq!(ts.len(), 147);
        let only_z = subsample_training(&resp, 1.25, &[Channel::Displacement]).unwrap();
        assert!(only_z.entries().iter().all(|e| e.channel == Channel::Displacement));
        assert_eq!(only_z.len(), 49);
        let all = subsample_training(&resp, 0.05, &[Channel::Velocity]).unwrap();
        assert_eq!(all.len(), 1201);
        assert!(subsample_training(&resp, 0.01, &[Channel::Velocity]).is_err());
    }

    #[test]
    fn newmark_rejects_bad_step() {
        let osc = OscillatorParams::new(1.0, 0.1, 1.0).unwrap();
        let bad = TimeSeries {
            t0: 0.0,
            dt: 0.0,
            values: vec![0.0; 3],
        };
        assert!(newmark_response(&osc, &bad, Newmark::default(), 0.0, 0.0).is_err());
    }
}
