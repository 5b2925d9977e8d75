//! Heterogeneous-observation GP: covariance assembly, marginal likelihood and
//! its gradient, hyperparameter training, and force posterior conditioning.
//!
//! Observations of displacement, velocity and acceleration share one latent
//! SE process `z(t)`; each channel carries its own i.i.d. Gaussian noise. The
//! force `F = m z̈ + c ż + k_s z` is never observed and is recovered purely by
//! conditioning on the responses.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Error, Result};
use crate::kernels::{
    combine, lag_derivatives, lag_derivatives_dlog_ell, Channel, KernelParams, OscillatorParams,
};
use crate::linalg::{axpy, Cholesky, Matrix};
use crate::optim::{minimize_bfgs, BfgsOptions};
use crate::scalar::{std_dev, Real};

/// Number of trainable hyperparameters.
pub const N_HYPER: usize = 5;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation<T> {
    pub time: T,
    pub value: T,
    pub channel: Channel,
}

/// Response measurements used for training, possibly irregular and with
/// distinct time grids per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet<T> {
    entries: Vec<Observation<T>>,
}

impl<T: Real> TrainingSet<T> {
    pub fn new(entries: Vec<Observation<T>>) -> Result<Self> {
        if entries.is_empty() {
            return domain("training set must contain at least one observation");
        }
        for e in &entries {
            if e.channel == Channel::Force {
                return domain("force observations are not allowed in training data");
            }
            if !e.time.is_finite() || !e.value.is_finite() {
                return domain(format!("non-finite observation at t = {}", e.time));
            }
        }
        let mut keys: Vec<(Channel, T)> = entries.iter().map(|e| (e.channel, e.time)).collect();
        keys.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.partial_cmp(&b.1).expect("finite times")));
        if let Some(w) = keys.windows(2).find(|w| w[0] == w[1]) {
            return domain(format!("duplicate {} observation at t = {}", w[0].0, w[0].1));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[Observation<T>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn values(&self) -> Vec<T> {
        self.entries.iter().map(|e| e.value).collect()
    }

    pub fn has_channel(&self, ch: Channel) -> bool {
        self.entries.iter().any(|e| e.channel == ch)
    }

    pub fn channel_values(&self, ch: Channel) -> Vec<T> {
        self.entries
            .iter()
            .filter(|e| e.channel == ch)
            .map(|e| e.value)
            .collect()
    }

    /// `(min, max)` of observation times.
    pub fn time_span(&self) -> (T, T) {
        self.entries.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), e| {
            (lo.min(e.time), hi.max(e.time))
        })
    }

    /// Smallest positive gap between distinct observation instants.
    pub fn min_spacing(&self) -> Option<T> {
        let mut ts: Vec<T> = self.entries.iter().map(|e| e.time).collect();
        ts.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
        ts.windows(2)
            .map(|w| w[1] - w[0])
            .filter(|&d| d > T::zero())
            .fold(None, |m: Option<T>, d| Some(m.map_or(d, |m| m.min(d))))
    }

    /// Entries whose time lies in `[t_lo, t_hi]`.
    pub fn window(&self, t_lo: T, t_hi: T) -> Result<Self> {
        Self::new(
            self.entries
                .iter()
                .filter(|e| e.time >= t_lo && e.time <= t_hi)
                .copied()
                .collect(),
        )
    }

    /// Multiplies every observed value by `s`.
    pub fn scaled(&self, s: T) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .map(|e| Observation {
                    value: e.value * s,
                    ..*e
                })
                .collect(),
        }
    }
}

/// Kernel scale, length scale and per-channel noise standard deviations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams<T> {
    pub sigma_s: T,
    pub ell: T,
    pub sigma_z: T,
    pub sigma_zdot: T,
    pub sigma_zddot: T,
}

impl<T: Real> Hyperparams<T> {
    pub fn new(sigma_s: T, ell: T, sigma_z: T, sigma_zdot: T, sigma_zddot: T) -> Result<Self> {
        let hp = Self {
            sigma_s,
            ell,
            sigma_z,
            sigma_zdot,
            sigma_zddot,
        };
        hp.validate()?;
        Ok(hp)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma_s", self.sigma_s),
            ("ell", self.ell),
            ("sigma_z", self.sigma_z),
            ("sigma_zdot", self.sigma_zdot),
            ("sigma_zddot", self.sigma_zddot),
        ] {
            if !(v > T::zero() && v.is_finite()) {
                return domain(format!("{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }

    /// `[ln σ_s, ln ℓ, ln σ_z, ln σ_ż, ln σ_z̈]`
    pub fn to_log(&self) -> [T; N_HYPER] {
        [
            self.sigma_s.ln(),
            self.ell.ln(),
            self.sigma_z.ln(),
            self.sigma_zdot.ln(),
            self.sigma_zddot.ln(),
        ]
    }

    pub fn from_log(x: &[T]) -> Self {
        Self {
            sigma_s: x[0].exp(),
            ell: x[1].exp(),
            sigma_z: x[2].exp(),
            sigma_zdot: x[3].exp(),
            sigma_zddot: x[4].exp(),
        }
    }

    pub fn kernel(&self) -> KernelParams<T> {
        KernelParams {
            sigma_s: self.sigma_s,
            ell: self.ell,
        }
    }

    /// Noise standard deviation of a response channel (zero for force).
    pub fn noise(&self, ch: Channel) -> T {
        match ch {
            Channel::Displacement => self.sigma_z,
            Channel::Velocity => self.sigma_zdot,
            Channel::Acceleration => self.sigma_zddot,
            Channel::Force => T::zero(),
        }
    }

    /// Same model with all σ's multiplied by `s` (length scale unchanged).
    pub fn scaled(&self, s: T) -> Self {
        Self {
            sigma_s: self.sigma_s * s,
            ell: self.ell,
            sigma_z: self.sigma_z * s,
            sigma_zdot: self.sigma_zdot * s,
            sigma_zddot: self.sigma_zddot * s,
        }
    }
}

fn noise_index(ch: Channel) -> Option<usize> {
    match ch {
        Channel::Displacement => Some(2),
        Channel::Velocity => Some(3),
        Channel::Acceleration => Some(4),
        Channel::Force => None,
    }
}

/// Noise-free covariance between observations (no diagonal noise).
fn signal_covariance<T: Real>(
    train: &TrainingSet<T>,
    kp: &KernelParams<T>,
    osc: &OscillatorParams<T>,
) -> Matrix<T> {
    let e = train.entries();
    let n = e.len();
    let ops: Vec<[T; 3]> = e.iter().map(|o| o.channel.operator(osc)).collect();
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let d = lag_derivatives(e[i].time - e[j].time, kp);
            let v = combine(&ops[i], &ops[j], &d);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Block covariance of the training observations including per-channel noise
/// on the diagonal.
pub fn assemble_covariance<T: Real>(
    train: &TrainingSet<T>,
    hp: &Hyperparams<T>,
    osc: &OscillatorParams<T>,
) -> Matrix<T> {
    let mut k = signal_covariance(train, &hp.kernel(), osc);
    for (i, e) in train.entries().iter().enumerate() {
        let s = hp.noise(e.channel);
        k[(i, i)] += s * s;
    }
    k
}

/// `−½ yᵀK⁻¹y − ½ log|K| − (N/2) log 2π` via a jittered Cholesky factor.
pub fn log_marginal_likelihood<T: Real>(y: &[T], k: &Matrix<T>) -> Result<T> {
    if y.len() != k.rows() || k.rows() != k.cols() {
        return domain(format!(
            "observation vector of length {} does not match {}x{} covariance",
            y.len(),
            k.rows(),
            k.cols()
        ));
    }
    let chol = Cholesky::with_jitter(k)?;
    Ok(lml_from_factor(y, &chol).0)
}

fn lml_from_factor<T: Real>(y: &[T], chol: &Cholesky<T>) -> (T, Vec<T>) {
    let v = chol.solve_lower(y);
    let alpha = chol.solve_upper(&v);
    let fit: T = v.iter().map(|&a| a * a).sum();
    let n = T::of_usize(y.len());
    let lml = -T::of(0.5) * fit - T::of(0.5) * chol.log_det() - T::of(0.5) * n * (T::TAU()).ln();
    (lml, alpha)
}

/// Log marginal likelihood and its gradient with respect to
/// `[ln σ_s, ln ℓ, ln σ_z, ln σ_ż, ln σ_z̈]`.
pub fn lml_and_gradient<T: Real>(
    train: &TrainingSet<T>,
    hp: &Hyperparams<T>,
    osc: &OscillatorParams<T>,
) -> Result<(T, [T; N_HYPER])> {
    let k = assemble_covariance(train, hp, osc);
    let chol = Cholesky::with_jitter(&k)?;
    let y = train.values();
    let (lml, alpha) = lml_from_factor(&y, &chol);
    let kinv = chol.inverse();
    let e = train.entries();
    let n = e.len();
    let kp = hp.kernel();
    let ops: Vec<[T; 3]> = e.iter().map(|o| o.channel.operator(osc)).collect();

    // ∂L/∂θ = ½ tr(W ∂K/∂θ) with W = ααᵀ − K⁻¹; off-diagonal pairs count twice.
    let mut g_sig = T::zero();
    let mut g_ell = T::zero();
    let mut g_noise = [T::zero(); 3];
    let two = T::of(2.0);
    for i in 0..n {
        let krow = kinv.row(i);
        for j in 0..=i {
            let w = alpha[i] * alpha[j] - krow[j];
            let w = if i == j { w } else { two * w };
            let tau = e[i].time - e[j].time;
            let d = lag_derivatives(tau, &kp);
            let dl = lag_derivatives_dlog_ell(tau, &kp);
            g_sig += w * two * combine(&ops[i], &ops[j], &d);
            g_ell += w * combine(&ops[i], &ops[j], &dl);
        }
        if let Some(idx) = noise_index(e[i].channel) {
            let s = hp.noise(e[i].channel);
            let w = alpha[i] * alpha[i] - krow[i];
            g_noise[idx - 2] += w * two * s * s;
        }
    }
    let half = T::of(0.5);
    Ok((
        lml,
        [
            half * g_sig,
            half * g_ell,
            half * g_noise[0],
            half * g_noise[1],
            half * g_noise[2],
        ],
    ))
}

/// Gradient of the log marginal likelihood over the log-hyperparameters.
pub fn lml_gradient<T: Real>(
    train: &TrainingSet<T>,
    hp: &Hyperparams<T>,
    osc: &OscillatorParams<T>,
) -> Result<[T; N_HYPER]> {
    lml_and_gradient(train, hp, osc).map(|(_, g)| g)
}

/// Log marginal likelihood of a training set under given hyperparameters.
pub fn training_lml<T: Real>(
    train: &TrainingSet<T>,
    hp: &Hyperparams<T>,
    osc: &OscillatorParams<T>,
) -> Result<T> {
    log_marginal_likelihood(&train.values(), &assemble_covariance(train, hp, osc))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub seed: u64,
    pub bfgs: BfgsOptions,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 4,
            seed: 0,
            bfgs: BfgsOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartOutcome<T> {
    pub initial: Hyperparams<T>,
    /// `None` when the restart could not be evaluated at its start point.
    pub result: Option<(Hyperparams<T>, T)>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel<T> {
    pub hyperparams: Hyperparams<T>,
    pub lml: T,
    pub gradient: [T; N_HYPER],
    pub restarts: Vec<RestartOutcome<T>>,
}

/// Search box and starting-point scales derived from the data.
struct DataScales<T> {
    sigma_s: T,
    noise: [T; 3],
    ell_lo: T,
    ell_hi: T,
    init_ell_lo: T,
    init_ell_hi: T,
}

fn data_scales<T: Real>(train: &TrainingSet<T>, init_ell_lo: T) -> DataScales<T> {
    let (t0, t1) = train.time_span();
    let span = (t1 - t0).max(T::epsilon());
    let spacing = train.min_spacing().unwrap_or(span);
    let stds: Vec<T> = Channel::RESPONSES
        .iter()
        .map(|&ch| std_dev(&train.channel_values(ch)))
        .collect();
    let init_ell_hi = (span / T::of(4.0)).max(init_ell_lo * T::of(1.0001));
    // σ_s from the displacement spread, or from a derivative channel rescaled
    // by a mid-range length scale.
    let ell_mid = (init_ell_lo * init_ell_hi).sqrt();
    let sigma_s = if stds[0] > T::zero() {
        stds[0]
    } else if stds[1] > T::zero() {
        stds[1] * ell_mid
    } else if stds[2] > T::zero() {
        stds[2] * ell_mid * ell_mid
    } else {
        T::one()
    };
    let mut noise = [T::one(); 3];
    for c in 0..3 {
        if stds[c] > T::zero() {
            noise[c] = stds[c] * T::of(0.1);
        }
    }
    DataScales {
        sigma_s,
        noise,
        ell_lo: (spacing * T::of(0.1)).min(init_ell_lo),
        ell_hi: span * T::of(10.0),
        init_ell_lo,
        init_ell_hi,
    }
}

/// Multi-start box-constrained BFGS ascent of the log marginal likelihood.
///
/// Restart `r` draws `ℓ` log-uniformly in `[Δt_train, T/4]` (Δt_train is the
/// smallest spacing between observation instants, T the training window);
/// `σ_s` starts at the data spread and every noise σ at 10% of its channel's
/// standard deviation. Noise σ's are kept above `1e-6` of the channel spread.
pub fn optimize_hyperparams<T: Real>(
    train: &TrainingSet<T>,
    osc: &OscillatorParams<T>,
    cfg: &OptimizerConfig,
) -> Result<TrainedModel<T>> {
    if cfg.restarts == 0 {
        return domain("at least one optimizer restart is required");
    }
    let (t0, t1) = train.time_span();
    let span = (t1 - t0).max(T::epsilon());
    let dt_train = train.min_spacing().unwrap_or(span);
    let sc = data_scales(train, dt_train);

    let floor = T::of(1e-6);
    let mut lower = [T::zero(); N_HYPER];
    let mut upper = [T::zero(); N_HYPER];
    lower[0] = (sc.sigma_s * floor).ln();
    upper[0] = (sc.sigma_s * T::of(1e6)).ln();
    lower[1] = sc.ell_lo.ln();
    upper[1] = sc.ell_hi.ln();
    for c in 0..3 {
        lower[2 + c] = (sc.noise[c] * T::of(10.0) * floor).ln();
        upper[2 + c] = (sc.noise[c] * T::of(100.0)).ln();
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (ln_lo, ln_hi) = (
        sc.init_ell_lo.to_f64_lossy().ln(),
        sc.init_ell_hi.to_f64_lossy().ln(),
    );
    let mut outcomes = Vec::with_capacity(cfg.restarts);
    let mut best: Option<(Hyperparams<T>, T)> = None;
    for _ in 0..cfg.restarts {
        let ell0 = T::of(rng.gen_range(ln_lo..=ln_hi).exp());
        let init = Hyperparams {
            sigma_s: sc.sigma_s,
            ell: ell0,
            sigma_z: sc.noise[0],
            sigma_zdot: sc.noise[1],
            sigma_zddot: sc.noise[2],
        };
        let objective = |x: &[T]| {
            let hp = Hyperparams::from_log(x);
            lml_and_gradient(train, &hp, osc)
                .ok()
                .map(|(l, g)| (-l, g.iter().map(|&v| -v).collect()))
        };
        let res = minimize_bfgs(objective, &init.to_log(), &lower, &upper, &cfg.bfgs);
        let outcome = match res {
            Some(r) => {
                let hp = Hyperparams::from_log(&r.x);
                let lml = -r.f;
                if best.as_ref().is_none_or(|(_, b)| lml > *b) {
                    best = Some((hp, lml));
                }
                RestartOutcome {
                    initial: init,
                    result: Some((hp, lml)),
                    iterations: r.iterations,
                    converged: r.converged,
                }
            }
            None => RestartOutcome {
                initial: init,
                result: None,
                iterations: 0,
                converged: false,
            },
        };
        log::debug!("restart from ell = {ell0}: {:?}", outcome.result);
        outcomes.push(outcome);
    }
    let (hyperparams, lml) = best.ok_or_else(|| {
        Error::Optimization(format!(
            "all {} restarts failed to factorize the covariance",
            cfg.restarts
        ))
    })?;
    let gradient = lml_gradient(train, &hyperparams, osc)?;
    Ok(TrainedModel {
        hyperparams,
        lml,
        gradient,
        restarts: outcomes,
    })
}

/// Posterior covariance, either full or marginal variances only.
#[derive(Debug, Clone, PartialEq)]
pub enum PosteriorCov<T> {
    Full(Matrix<T>),
    Marginal(Vec<T>),
}

/// Gaussian posterior of the latent force on a prediction grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorForce<T> {
    pub times: Vec<T>,
    pub mean: Vec<T>,
    pub cov: PosteriorCov<T>,
}

impl<T: Real> PosteriorForce<T> {
    /// Raw marginal variances (may be slightly negative from rounding).
    pub fn variance(&self) -> Vec<T> {
        match &self.cov {
            PosteriorCov::Full(m) => m.diagonal(),
            PosteriorCov::Marginal(v) => v.clone(),
        }
    }

    /// Marginal standard deviations, negative variances clipped to zero.
    pub fn std(&self) -> Vec<T> {
        self.variance()
            .into_iter()
            .map(|v| v.max(T::zero()).sqrt())
            .collect()
    }

    /// `(mean − 1.96σ, mean + 1.96σ)`
    pub fn interval95(&self) -> (Vec<T>, Vec<T>) {
        let z = T::of(Z95);
        self.mean
            .iter()
            .zip(self.std())
            .map(|(&m, s)| (m - z * s, m + z * s))
            .unzip()
    }

    pub fn full_cov(&self) -> Option<&Matrix<T>> {
        match &self.cov {
            PosteriorCov::Full(m) => Some(m),
            PosteriorCov::Marginal(_) => None,
        }
    }
}

/// Cross-covariances `cov(y_i, F(t*_j))`, one row per observation.
fn force_cross_block<T: Real>(
    train: &TrainingSet<T>,
    kp: &KernelParams<T>,
    osc: &OscillatorParams<T>,
    t_star: &[T],
) -> Matrix<T> {
    let f_op = Channel::Force.operator(osc);
    let e = train.entries();
    let mut ks = Matrix::zeros(e.len(), t_star.len());
    for (i, o) in e.iter().enumerate() {
        let op = o.channel.operator(osc);
        let row = ks.row_mut(i);
        for (j, &ts) in t_star.iter().enumerate() {
            row[j] = combine(&op, &f_op, &lag_derivatives(o.time - ts, kp));
        }
    }
    ks
}

struct Conditioner<T> {
    chol: Cholesky<T>,
    alpha: Vec<T>,
}

fn conditioner<T: Real>(
    train: &TrainingSet<T>,
    hp: &Hyperparams<T>,
    osc: &OscillatorParams<T>,
    t_star: &[T],
) -> Result<Conditioner<T>> {
    hp.validate()?;
    osc.validate()?;
    if t_star.is_empty() {
        return domain("prediction grid must not be empty");
    }
    let k = assemble_covariance(train, hp, osc);
    let chol = Cholesky::with_jitter(&k)?;
    let alpha = chol.solve(&train.values());
    Ok(Conditioner { chol, alpha })
}

/// Posterior of the force on `t_star` with full covariance
/// `K** − K*ᵀ K⁻¹ K*`.
pub fn predict_force<T: Real>(
    train: &TrainingSet<T>,
    hp: &Hyperparams<T>,
    osc: &OscillatorParams<T>,
    t_star: &[T],
) -> Result<PosteriorForce<T>> {
    let c = conditioner(train, hp, osc, t_star)?;
    let kp = hp.kernel();
    let ks = force_cross_block(train, &kp, osc, t_star);
    let mean = mean_from_block(&ks, &c.alpha);
    let v = c.chol.solve_lower_block(&ks);
    let m = t_star.len();
    let f_op = Channel::Force.operator(osc);
    let mut cov = Matrix::from_fn(m, m, |a, b| {
        combine(&f_op, &f_op, &lag_derivatives(t_star[a] - t_star[b], &kp))
    });
    let mut vtv = Matrix::zeros(m, m);
    for i in 0..v.rows() {
        let vi = v.row(i);
        for a in 0..m {
            if vi[a] != T::zero() {
                axpy(vi[a], vi, vtv.row_mut(a));
            }
        }
    }
    for a in 0..m {
        for b in 0..m {
            cov[(a, b)] -= vtv[(a, b)];
        }
    }
    // Symmetrize rounding.
    for a in 0..m {
        for b in 0..a {
            let s = (cov[(a, b)] + cov[(b, a)]) * T::of(0.5);
            cov[(a, b)] = s;
            cov[(b, a)] = s;
        }
    }
    Ok(PosteriorForce {
        times: t_star.to_vec(),
        mean,
        cov: PosteriorCov::Full(cov),
    })
}

/// Posterior mean and marginal variances only; memory stays linear in the
/// grid size, so long records can be predicted densely.
pub fn predict_force_marginal<T: Real>(
    train: &TrainingSet<T>,
    hp: &Hyperparams<T>,
    osc: &OscillatorParams<T>,
    t_star: &[T],
) -> Result<PosteriorForce<T>> {
    const BLOCK: usize = 256;
    let c = conditioner(train, hp, osc, t_star)?;
    let kp = hp.kernel();
    let f_op = Channel::Force.operator(osc);
    let prior_var = combine(&f_op, &f_op, &lag_derivatives(T::zero(), &kp));
    let mut mean = Vec::with_capacity(t_star.len());
    let mut var = Vec::with_capacity(t_star.len());
    for chunk in t_star.chunks(BLOCK) {
        let ks = force_cross_block(train, &kp, osc, chunk);
        mean.extend(mean_from_block(&ks, &c.alpha));
        let v = c.chol.solve_lower_block(&ks);
        let mut explained = vec![T::zero(); chunk.len()];
        for i in 0..v.rows() {
            for (acc, &x) in explained.iter_mut().zip(v.row(i)) {
                *acc += x * x;
            }
        }
        var.extend(explained.into_iter().map(|e| prior_var - e));
    }
    Ok(PosteriorForce {
        times: t_star.to_vec(),
        mean,
        cov: PosteriorCov::Marginal(var),
    })
}

fn mean_from_block<T: Real>(ks: &Matrix<T>, alpha: &[T]) -> Vec<T> {
    let mut mean = vec![T::zero(); ks.cols()];
    for (i, &a) in alpha.iter().enumerate() {
        axpy(a, ks.row(i), &mut mean);
    }
    mean
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn osc() -> OscillatorParams<f64> {
        OscillatorParams::new(1.0, 0.05, 1.3).unwrap()
    }

    fn hp() -> Hyperparams<f64> {
        Hyperparams::new(1.2, 0.9, 0.1, 0.2, 0.3).unwrap()
    }

    fn obs(time: f64, value: f64, channel: Channel) -> Observation<f64> {
        Observation {
            time,
            value,
            channel,
        }
    }

    #[test]
    fn training_set_validation() {
        assert!(TrainingSet::<f64>::new(vec![]).is_err());
        assert!(TrainingSet::new(vec![obs(0.0, 1.0, Channel::Force)]).is_err());
        assert!(TrainingSet::new(vec![
            obs(1.0, 1.0, Channel::Velocity),
            obs(1.0, 2.0, Channel::Velocity)
        ])
        .is_err());
        // Same instant on different channels is fine.
        assert!(TrainingSet::new(vec![
            obs(1.0, 1.0, Channel::Velocity),
            obs(1.0, 2.0, Channel::Displacement)
        ])
        .is_ok());
    }

    #[test]
    fn single_displacement_covariance() {
        let t = TrainingSet::new(vec![obs(3.0, 0.5, Channel::Displacement)]).unwrap();
        let k = assemble_covariance(&t, &hp(), &osc());
        assert_relative_eq!(k[(0, 0)], 1.2 * 1.2 + 0.1 * 0.1, epsilon = 1e-15);
    }

    #[test]
    fn displacement_velocity_same_instant() {
        let t = TrainingSet::new(vec![
            obs(0.0, 0.5, Channel::Displacement),
            obs(0.0, 0.1, Channel::Velocity),
        ])
        .unwrap();
        let h = hp();
        let k = assemble_covariance(&t, &h, &osc());
        assert_eq!(k[(0, 1)], 0.0);
        assert_eq!(k[(1, 0)], 0.0);
        assert_relative_eq!(k[(1, 1)], 1.44 / 0.81 + 0.04, epsilon = 1e-14);
    }

    #[test]
    fn lml_closed_forms() {
        let k = Matrix::from_row_major(1, 1, vec![2.0]);
        let v = log_marginal_likelihood(&[1.0], &k).unwrap();
        let expect = -0.25 - 0.5 * 2f64.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert_relative_eq!(v, expect, max_relative = 1e-9);
        assert_relative_eq!(v, -1.5155, epsilon = 1e-4);
        let k = Matrix::from_row_major(1, 1, vec![1.0]);
        assert_relative_eq!(
            log_marginal_likelihood(&[0.0], &k).unwrap(),
            -0.918938533204673,
            max_relative = 1e-9
        );
        assert!(log_marginal_likelihood(&[0.0, 1.0], &k).is_err());
    }

    #[test]
    fn absent_channel_has_zero_noise_gradient() {
        let t = TrainingSet::new(
            (0..12)
                .map(|i| obs(i as f64 * 0.4, (i as f64 * 0.7).sin(), Channel::Velocity))
                .chain((0..12).map(|i| obs(i as f64 * 0.4, (i as f64).cos(), Channel::Acceleration)))
                .collect(),
        )
        .unwrap();
        let g = lml_gradient(&t, &hp(), &osc()).unwrap();
        assert_eq!(g[2], 0.0);
        assert!(g[3] != 0.0 && g[4] != 0.0);
    }

    #[test]
    fn far_prediction_reverts_to_prior() {
        let t = TrainingSet::new(
            (0..20)
                .map(|i| obs(i as f64 * 0.3, (i as f64 * 0.3).sin(), Channel::Displacement))
                .collect(),
        )
        .unwrap();
        let h = hp();
        let o = osc();
        let far = 6.0 + 12.0 * h.ell;
        let post = predict_force(&t, &h, &o, &[far]).unwrap();
        let prior = crate::kernels::cross_kernel(Channel::Force, Channel::Force, 0.0, 0.0, &h.kernel(), &o);
        assert!(post.mean[0].abs() < 1e-12);
        assert_relative_eq!(post.variance()[0], prior, max_relative = 1e-12);
    }

    #[test]
    fn marginal_matches_full() {
        let t = TrainingSet::new(
            (0..15)
                .map(|i| obs(i as f64 * 0.5, (i as f64 * 0.5).sin(), Channel::Displacement))
                .chain((0..15).map(|i| obs(i as f64 * 0.5 + 0.2, (i as f64 * 0.5).cos(), Channel::Velocity)))
                .collect(),
        )
        .unwrap();
        let grid: Vec<f64> = (0..40).map(|i| i as f64 * 0.2).collect();
        let full = predict_force(&t, &hp(), &osc(), &grid).unwrap();
        let marg = predict_force_marginal(&t, &hp(), &osc(), &grid).unwrap();
        for i in 0..grid.len() {
            assert_relative_eq!(full.mean[i], marg.mean[i], max_relative = 1e-12, epsilon = 1e-12);
            assert_relative_eq!(full.variance()[i], marg.variance()[i], max_relative = 1e-9, epsilon = 1e-10);
        }
        assert!(full.full_cov().unwrap().asymmetry() == 0.0);
        let (lo, hi) = marg.interval95();
        for i in 0..grid.len() {
            assert!(lo[i] <= marg.mean[i] && marg.mean[i] <= hi[i]);
        }
    }

    #[test]
    fn empty_grid_rejected() {
        let t = TrainingSet::new(vec![obs(0.0, 1.0, Channel::Displacement)]).unwrap();
        assert!(predict_force(&t, &hp(), &osc(), &[]).is_err());
    }

    #[test]
    fn zero_restarts_rejected() {
        let t = TrainingSet::new(vec![obs(0.0, 1.0, Channel::Displacement)]).unwrap();
        let cfg = OptimizerConfig {
            restarts: 0,
            ..Default::default()
        };
        assert!(optimize_hyperparams(&t, &osc(), &cfg).is_err());
    }
}
