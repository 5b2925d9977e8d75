//! Spatially correlated von Kármán turbulence and quasi-steady buffeting loads.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Result};
use crate::linalg::Matrix;
use crate::oscillator::{Dof, ModalModel};
use crate::scalar::{fft_real, Real};
use crate::series::TimeSeries;

/// Turbulence component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    /// Along-wind.
    U,
    /// Vertical.
    W,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindConfig<T> {
    /// Mean wind speed `U` (m/s).
    pub mean_speed: T,
    pub intensity_u: T,
    pub intensity_w: T,
    /// Integral length scales (m).
    pub length_u: T,
    pub length_w: T,
    pub dt: T,
    pub duration: T,
    /// Node positions along the span (m).
    pub nodes: Vec<T>,
    /// Davenport decay constant `C` in `exp(−C f Δx / U)`.
    pub coherence_decay: T,
}

impl<T: Real> WindConfig<T> {
    /// `U = 30 m/s`, `I_u = 8%`, `I_w = 6%`, `L_u = L_w = 60 m`, `C = 10`.
    pub fn reference(dt: T, duration: T, nodes: Vec<T>) -> Self {
        Self {
            mean_speed: T::of(30.0),
            intensity_u: T::of(0.08),
            intensity_w: T::of(0.06),
            length_u: T::of(60.0),
            length_w: T::of(60.0),
            dt,
            duration,
            nodes,
            coherence_decay: T::of(10.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: T| v > T::zero() && v.is_finite();
        if !pos(self.mean_speed) {
            return domain("mean wind speed must be positive");
        }
        for (name, i) in [("I_u", self.intensity_u), ("I_w", self.intensity_w)] {
            if !(i > T::zero() && i < T::one()) {
                return domain(format!("turbulence intensity {name} must lie in (0, 1), got {i}"));
            }
        }
        if !pos(self.length_u) || !pos(self.length_w) {
            return domain("turbulence length scales must be positive");
        }
        if !pos(self.dt) {
            return domain("time step must be positive");
        }
        if !(self.coherence_decay >= T::zero()) {
            return domain("coherence decay must be nonnegative");
        }
        if self.nodes.is_empty() {
            return domain("at least one node is required");
        }
        if self.nodes.windows(2).any(|w| w[1] < w[0]) {
            return domain("node positions must be nondecreasing");
        }
        if self.n_samples() < 2 {
            return domain("duration / dt must yield at least two samples");
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        if !(self.duration > T::zero()) || !(self.dt > T::zero()) {
            return 0;
        }
        (self.duration / self.dt + T::of(1e-9)).floor().to_usize().unwrap_or(0)
    }

    pub fn sigma(&self, c: Component) -> T {
        match c {
            Component::U => self.intensity_u * self.mean_speed,
            Component::W => self.intensity_w * self.mean_speed,
        }
    }
}

/// One-sided von Kármán spectrum ((m/s)²/Hz).
pub fn von_karman_psd<T: Real>(f: T, component: Component, cfg: &WindConfig<T>) -> Result<T> {
    if !(f >= T::zero()) {
        return domain(format!("frequency must be nonnegative, got {f}"));
    }
    let s = cfg.sigma(component);
    let c = T::of;
    Ok(match component {
        Component::U => {
            let lu = cfg.length_u / cfg.mean_speed;
            let n = f * lu;
            c(4.0) * s * s * lu / (T::one() + c(70.8) * n * n).powf(c(5.0 / 6.0))
        }
        Component::W => {
            let lw = cfg.length_w / cfg.mean_speed;
            let n = f * lw;
            c(4.0) * s * s * lw * (T::one() + c(755.2) * n * n)
                / (T::one() + c(283.2) * n * n).powf(c(11.0 / 6.0))
        }
    })
}

/// Davenport root-coherence `exp(−C f |Δx| / U)`.
pub fn coherence<T: Real>(f: T, dx: T, cfg: &WindConfig<T>) -> T {
    (-cfg.coherence_decay * f.abs() * dx.abs() / cfg.mean_speed).exp()
}

/// Turbulence time histories at every configured node.
#[derive(Debug, Clone, PartialEq)]
pub struct TurbulenceField<T> {
    pub mean_speed: T,
    pub nodes: Vec<T>,
    pub u: Vec<TimeSeries<T>>,
    pub w: Vec<TimeSeries<T>>,
}

impl<T: Real> TurbulenceField<T> {
    pub fn scaled(&self, s: T) -> Self {
        Self {
            mean_speed: self.mean_speed,
            nodes: self.nodes.clone(),
            u: self.u.iter().map(|x| x.scaled(s)).collect(),
            w: self.w.iter().map(|x| x.scaled(s)).collect(),
        }
    }

    pub fn zeros(mean_speed: T, nodes: Vec<T>, dt: T, n: usize) -> Result<Self> {
        let z = TimeSeries::zeros(T::zero(), dt, n)?;
        Ok(Self {
            mean_speed,
            u: vec![z.clone(); nodes.len()],
            w: vec![z; nodes.len()],
            nodes,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.u.first().map_or(0, |s| s.len())
    }
}

/// Lower factor `H` with `H Hᵀ = A` for a symmetric positive semidefinite
/// matrix. Zero pivots (coincident nodes) are handled by zeroing the column;
/// genuinely indefinite input falls back to an eigendecomposition with
/// negative eigenvalues clipped to zero.
pub fn psd_factor<T: Real>(a: &Matrix<T>) -> Matrix<T> {
    let n = a.rows();
    let scale = a.diagonal().into_iter().fold(T::zero(), T::max);
    let tol = scale * T::epsilon() * T::of(64.0);
    let mut l = Matrix::zeros(n, n);
    let mut ok = true;
    'outer: for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d < -tol * T::of(1e6) {
            ok = false;
            break 'outer;
        }
        if d <= tol {
            // Column j is (numerically) a combination of earlier ones.
            continue;
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    if ok {
        return l;
    }
    log::warn!("cross-spectral matrix not positive semidefinite; clipping negative eigenvalues");
    let dm = DMatrix::from_fn(n, n, |i, j| a[(i, j)].to_f64_lossy());
    let eig = SymmetricEigen::new(dm);
    Matrix::from_fn(n, n, |i, j| {
        T::of(eig.eigenvectors[(i, j)] * eig.eigenvalues[j].max(0.0).sqrt())
    })
}

/// Applies the lower Cholesky factor of the Davenport coherence matrix on
/// sorted `nodes` to `e`, in place.
///
/// Exponential coherence along a line is Markov in `x`, so the factor is
/// `L[i][j] = s_j Π_{k=j+1..=i} ρ_k` with `ρ_k` the coherence between
/// neighbours `k − 1` and `k`, `s_0 = 1` and `s_j = √(1 − ρ_j²)`. Applying it
/// is a first-order recursion, O(n) per frequency line instead of O(n³).
pub fn apply_coherence_factor<T: Real>(f: T, nodes: &[T], cfg: &WindConfig<T>, e: &mut [Complex<T>]) {
    let rate = cfg.coherence_decay * f / cfg.mean_speed;
    for j in 1..e.len() {
        let a = rate * (nodes[j] - nodes[j - 1]).abs();
        let rho = (-a).exp();
        let s = (-(-(a + a)).exp_m1()).sqrt();
        e[j] = e[j - 1] * rho + e[j] * s;
    }
}

/// Spectral-representation synthesis of mutually independent `u` and `w`
/// fields. Each frequency line `f_k = k/T` (strictly below Nyquist) gets
/// the factorized cross-spectral matrix (see [`apply_coherence_factor`])
/// and an independent uniform phase per node; phases are drawn in a fixed
/// (component, line, node) order so the output depends only on `seed`.
pub fn synthesize_turbulence<T: Real>(cfg: &WindConfig<T>, seed: u64) -> Result<TurbulenceField<T>> {
    cfg.validate()?;
    let n = cfg.n_samples();
    let nodes = cfg.nodes.len();
    let df = T::one() / (T::of_usize(n) * cfg.dt);
    let lines = (n - 1) / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut fields = Vec::with_capacity(2);
    for comp in [Component::U, Component::W] {
        let mut spectra = vec![vec![Complex::new(T::zero(), T::zero()); n]; nodes];
        for k in 1..=lines {
            let f = df * T::of_usize(k);
            let s = von_karman_psd(f, comp, cfg)?;
            let amp = (T::of(2.0) * s * df).sqrt();
            let mut phases: Vec<Complex<T>> = (0..nodes)
                .map(|_| {
                    let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                    Complex::new(T::of(th.cos()), T::of(th.sin()))
                })
                .collect();
            apply_coherence_factor(f, &cfg.nodes, cfg, &mut phases);
            for (spec, x) in spectra.iter_mut().zip(phases) {
                spec[k] = x * amp;
            }
        }
        let series = spectra
            .into_iter()
            .map(|mut spec| {
                // Σ_k A_k cos(2π f_k t + θ_k) = Re(unnormalized inverse DFT).
                T::fft_in_place(&mut spec, true);
                TimeSeries::new(T::zero(), cfg.dt, spec.into_iter().map(|c| c.re).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        fields.push(series);
    }
    let w = fields.pop().expect("w field");
    let u = fields.pop().expect("u field");
    Ok(TurbulenceField {
        mean_speed: cfg.mean_speed,
        nodes: cfg.nodes.clone(),
        u,
        w,
    })
}

/// Deck section properties for quasi-steady buffeting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AeroSection<T> {
    pub rho: T,
    /// Deck width `B` (m).
    pub width: T,
    /// Deck height `H` (m).
    pub height: T,
    pub c_d: T,
    pub c_l: T,
    pub c_m: T,
    /// Lift and moment slopes (1/rad).
    pub dc_l: T,
    pub dc_m: T,
    /// Apply the Liepmann admittance `|χ|² = 1/(1 + 2π fB/U)`.
    pub admittance_on: bool,
}

impl<T: Real> AeroSection<T> {
    /// Representative streamlined box girder values (not measured data).
    pub fn representative() -> Self {
        Self {
            rho: T::of(1.25),
            width: T::of(31.0),
            height: T::of(4.4),
            c_d: T::of(0.08),
            c_l: T::of(-0.10),
            c_m: T::of(0.02),
            dc_l: T::of(4.4),
            dc_m: T::of(1.2),
            admittance_on: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > T::zero() && self.width > T::zero() && self.height > T::zero()) {
            return domain("air density, deck width and height must be positive");
        }
        Ok(())
    }
}

/// Zero-phase filter with amplitude `sqrt(|χ(f)|²)`, `|χ|² = 1/(1+2π fB/U)`.
fn admittance_filter<T: Real>(x: &TimeSeries<T>, width: T, speed: T) -> TimeSeries<T> {
    let n = x.len();
    let mut spec = fft_real(&x.values);
    let df = T::one() / (T::of_usize(n) * x.dt);
    for (k, c) in spec.iter_mut().enumerate() {
        let kk = if k <= n / 2 { k } else { n - k };
        let f = df * T::of_usize(kk);
        let chi2 = T::one() / (T::one() + T::TAU() * f * width / speed);
        *c = *c * chi2.sqrt();
    }
    T::fft_in_place(&mut spec, true);
    let inv_n = T::one() / T::of_usize(n);
    x.with_values(spec.into_iter().map(|c| c.re * inv_n).collect())
}

/// Per-node quasi-steady drag, lift and moment per unit length.
pub fn buffeting_loads<T: Real>(
    field: &TurbulenceField<T>,
    sec: &AeroSection<T>,
) -> Result<[Vec<TimeSeries<T>>; 3]> {
    sec.validate()?;
    let u_bar = field.mean_speed;
    let q = T::of(0.5) * sec.rho * u_bar * u_bar;
    let b = sec.width;
    let two = T::of(2.0);
    let mut drag = Vec::with_capacity(field.nodes.len());
    let mut lift = Vec::with_capacity(field.nodes.len());
    let mut moment = Vec::with_capacity(field.nodes.len());
    for (u, w) in field.u.iter().zip(&field.w) {
        if !u.same_grid(w) {
            return domain("u and w series must share a grid");
        }
        let (u, w) = if sec.admittance_on {
            (admittance_filter(u, b, u_bar), admittance_filter(w, b, u_bar))
        } else {
            (u.clone(), w.clone())
        };
        let lift_slope = sec.dc_l + sec.c_d * sec.height / b;
        let (mut d, mut l, mut m) = (Vec::new(), Vec::new(), Vec::new());
        for (&uu, &ww) in u.values.iter().zip(&w.values) {
            let (ur, wr) = (uu / u_bar, ww / u_bar);
            d.push(q * b * (two * sec.c_d * ur));
            l.push(q * b * (two * sec.c_l * ur + lift_slope * wr));
            m.push(q * b * b * (two * sec.c_m * ur + sec.dc_m * wr));
        }
        drag.push(u.with_values(d));
        lift.push(u.with_values(l));
        moment.push(u.with_values(m));
    }
    Ok([drag, lift, moment])
}

/// Modal buffeting forces `F_n(t) = ∫ φ_n(x) p(x, t) dx` (trapezoidal rule),
/// where `p` is drag, lift or moment according to the mode's DOF.
pub fn buffeting_modal_forces<T: Real>(
    field: &TurbulenceField<T>,
    model: &ModalModel<T>,
    sec: &AeroSection<T>,
) -> Result<Vec<TimeSeries<T>>> {
    if field.nodes.len() != model.n_nodes()
        || field.u.len() != model.n_nodes()
        || field
            .nodes
            .iter()
            .zip(&model.node_coords)
            .any(|(a, b)| (*a - *b).abs() > T::of(1e-6) * (T::one() + b.abs()))
    {
        return domain("turbulence field and modal model must share the node grid");
    }
    if let Some(first) = field.u.first() {
        if field.u.iter().chain(&field.w).any(|s| !s.same_grid(first)) {
            return domain("all turbulence series must share a grid");
        }
    }
    let loads = buffeting_loads(field, sec)?;
    let xs = &model.node_coords;
    let nn = xs.len();
    // Trapezoid weights.
    let mut wts = vec![T::zero(); nn];
    for i in 0..nn.saturating_sub(1) {
        let h = (xs[i + 1] - xs[i]) * T::of(0.5);
        wts[i] += h;
        wts[i + 1] += h;
    }
    let n_t = field.n_samples();
    let mut out = Vec::with_capacity(model.modes.len());
    for mode in &model.modes {
        let p = match mode.dof {
            Dof::Lateral => &loads[0],
            Dof::Vertical => &loads[1],
            Dof::Torsional => &loads[2],
        };
        let mut f = vec![T::zero(); n_t];
        for (node, series) in p.iter().enumerate() {
            let c = mode.shape[node] * wts[node];
            if c == T::zero() {
                continue;
            }
            for (acc, &v) in f.iter_mut().zip(&series.values) {
                *acc += c * v;
            }
        }
        out.push(p[0].with_values(f));
    }
    Ok(out)
}
