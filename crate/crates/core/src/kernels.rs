//! Squared-exponential kernel, its time derivatives, and the physics-informed
//! cross-covariances obtained by pushing the oscillator operator through it.
//!
//! With `τ = t − t′` the base kernel is `k(τ) = σ_s² exp(−τ²/(2ℓ²))` and
//!
//! ```text
//! dⁿk/dτⁿ = σ_s² (−1)ⁿ ℓ⁻ⁿ Heₙ(τ/ℓ) exp(−τ²/(2ℓ²))
//! ```
//!
//! where `Heₙ` are the probabilists' Hermite polynomials. Derivatives in the
//! first argument are `∂/∂t = d/dτ`, in the second `∂/∂t′ = −d/dτ`, so
//! `∂ᵃ_t ∂ᵇ_t′ k = (−1)ᵇ k⁽ᵃ⁺ᵇ⁾(τ)`.
//!
//! Every measurement channel is a linear differential operator of order ≤ 2
//! applied to the latent displacement: identity, `d/dt`, `d²/dt²`, and for the
//! force `m d²/dt² + c d/dt + k_s`. A cross-kernel is the bilinear combination
//! of the two operators' coefficients against the mixed derivatives above.

use crate::error::{domain, Result};
use crate::scalar::Real;

/// Highest derivative order per argument.
pub const MAX_ORDER: usize = 2;

/// Squared-exponential kernel hyperparameters (raw, positive values).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams<T> {
    /// Signal standard deviation (response units).
    pub sigma_s: T,
    /// Length scale in seconds.
    pub ell: T,
}

impl<T: Real> KernelParams<T> {
    pub fn new(sigma_s: T, ell: T) -> Result<Self> {
        let p = Self { sigma_s, ell };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_s > T::zero() && self.sigma_s.is_finite()) {
            return domain(format!("sigma_s must be positive, got {}", self.sigma_s));
        }
        if !(self.ell > T::zero() && self.ell.is_finite()) {
            return domain(format!("length scale must be positive, got {}", self.ell));
        }
        Ok(())
    }
}

/// Coefficients of one single-degree-of-freedom oscillator
/// `m z̈ + 2 m ζ ωₙ ż + m ωₙ² z = F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorParams<T> {
    pub mass: T,
    pub zeta: T,
    /// Circular natural frequency (rad/s).
    pub omega_n: T,
}

impl<T: Real> OscillatorParams<T> {
    pub fn new(mass: T, zeta: T, omega_n: T) -> Result<Self> {
        let p = Self {
            mass,
            zeta,
            omega_n,
        };
        p.validate()?;
        Ok(p)
    }

    /// Builds the oscillator from a natural frequency in Hz.
    pub fn from_hz(mass: T, zeta: T, f_n: T) -> Result<Self> {
        Self::new(mass, zeta, T::TAU() * f_n)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > T::zero() && self.mass.is_finite()) {
            return domain(format!("modal mass must be positive, got {}", self.mass));
        }
        if !(self.omega_n > T::zero() && self.omega_n.is_finite()) {
            return domain(format!("natural frequency must be positive, got {}", self.omega_n));
        }
        if !(self.zeta >= T::zero() && self.zeta < T::one()) {
            return domain(format!("damping ratio must lie in [0, 1), got {}", self.zeta));
        }
        Ok(())
    }

    /// Viscous damping coefficient `c = 2 m ζ ωₙ`.
    pub fn damping(&self) -> T {
        T::of(2.0) * self.mass * self.zeta * self.omega_n
    }

    /// Stiffness `k_s = m ωₙ²`.
    pub fn stiffness(&self) -> T {
        self.mass * self.omega_n * self.omega_n
    }

    pub fn natural_frequency_hz(&self) -> T {
        self.omega_n / T::TAU()
    }
}

/// What a given observation or prediction measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Channel {
    Displacement,
    Velocity,
    Acceleration,
    Force,
}

impl Channel {
    pub const RESPONSES: [Channel; 3] = [
        Channel::Displacement,
        Channel::Velocity,
        Channel::Acceleration,
    ];

    /// Coefficients of the channel's operator on `[1, d/dt, d²/dt²]`.
    pub fn operator<T: Real>(self, osc: &OscillatorParams<T>) -> [T; 3] {
        let (o, l) = (T::zero(), T::one());
        match self {
            Channel::Displacement => [l, o, o],
            Channel::Velocity => [o, l, o],
            Channel::Acceleration => [o, o, l],
            Channel::Force => [osc.stiffness(), osc.damping(), osc.mass],
        }
    }

    /// Derivative order for response channels, `None` for the force.
    pub fn derivative_order(self) -> Option<usize> {
        match self {
            Channel::Displacement => Some(0),
            Channel::Velocity => Some(1),
            Channel::Acceleration => Some(2),
            Channel::Force => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::Displacement => "displacement",
            Channel::Velocity => "velocity",
            Channel::Acceleration => "acceleration",
            Channel::Force => "force",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "displacement" | "z" => Some(Channel::Displacement),
            "velocity" | "zdot" => Some(Channel::Velocity),
            "acceleration" | "zddot" => Some(Channel::Acceleration),
            "force" | "f" => Some(Channel::Force),
            _ => None,
        }
    }
}

impl std::fmt::Display for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Probabilists' Hermite polynomials He₀..He₅ at `u`.
#[inline]
fn hermite<T: Real>(u: T) -> [T; 6] {
    let u2 = u * u;
    let c = T::of;
    [
        T::one(),
        u,
        u2 - T::one(),
        u * (u2 - c(3.0)),
        u2 * u2 - c(6.0) * u2 + c(3.0),
        u * (u2 * u2 - c(10.0) * u2 + c(15.0)),
    ]
}

/// `dⁿk/dτⁿ` for n = 0..=4.
#[inline]
pub fn lag_derivatives<T: Real>(tau: T, params: &KernelParams<T>) -> [T; 5] {
    let inv_ell = T::one() / params.ell;
    let u = tau * inv_ell;
    let he = hermite(u);
    let base = params.sigma_s * params.sigma_s * (-T::of(0.5) * u * u).exp();
    let mut out = [T::zero(); 5];
    let mut scale = base;
    for n in 0..5 {
        out[n] = if n % 2 == 0 { scale * he[n] } else { -scale * he[n] };
        scale *= inv_ell;
    }
    out
}

/// `ℓ ∂/∂ℓ` of each `dⁿk/dτⁿ`, n = 0..=4 (derivative with respect to `ln ℓ`).
#[inline]
pub fn lag_derivatives_dlog_ell<T: Real>(tau: T, params: &KernelParams<T>) -> [T; 5] {
    let inv_ell = T::one() / params.ell;
    let u = tau * inv_ell;
    let he = hermite(u);
    let base = params.sigma_s * params.sigma_s * (-T::of(0.5) * u * u).exp();
    let mut out = [T::zero(); 5];
    let mut scale = base;
    for n in 0..5 {
        let v = scale * (u * he[n + 1] - T::of_usize(n) * he[n]);
        out[n] = if n % 2 == 0 { v } else { -v };
        scale *= inv_ell;
    }
    out
}

/// Bilinear combination `Σ_pq a_p b_q ∂ᵖ_t ∂^q_t′ k` given the lag derivatives.
#[inline]
pub fn combine<T: Real>(a: &[T; 3], b: &[T; 3], d: &[T; 5]) -> T {
    let mut acc = T::zero();
    for (p, &ap) in a.iter().enumerate() {
        if ap == T::zero() {
            continue;
        }
        for (q, &bq) in b.iter().enumerate() {
            if bq == T::zero() {
                continue;
            }
            let term = ap * bq * d[p + q];
            if q % 2 == 0 {
                acc += term;
            } else {
                acc -= term;
            }
        }
    }
    acc
}

/// `σ_s² exp(−(t − t′)² / (2ℓ²))`
pub fn se_kernel<T: Real>(t: T, t_prime: T, params: &KernelParams<T>) -> T {
    let u = (t - t_prime) / params.ell;
    params.sigma_s * params.sigma_s * (-T::of(0.5) * u * u).exp()
}

/// `∂^(a+b) k / ∂tᵃ ∂t′ᵇ` in closed form, orders in `0..=2`.
pub fn se_kernel_mixed_deriv<T: Real>(
    t: T,
    t_prime: T,
    params: &KernelParams<T>,
    order_t: usize,
    order_t_prime: usize,
) -> Result<T> {
    if order_t > MAX_ORDER || order_t_prime > MAX_ORDER {
        return domain(format!(
            "derivative orders must be in 0..={MAX_ORDER}, got ({order_t}, {order_t_prime})"
        ));
    }
    let d = lag_derivatives(t - t_prime, params);
    let v = d[order_t + order_t_prime];
    Ok(if order_t_prime.is_multiple_of(2) { v } else { -v })
}

/// Covariance between channel `a` at time `t` and channel `b` at time `t′`.
pub fn cross_kernel<T: Real>(
    a: Channel,
    b: Channel,
    t: T,
    t_prime: T,
    kparams: &KernelParams<T>,
    osc: &OscillatorParams<T>,
) -> T {
    let d = lag_derivatives(t - t_prime, kparams);
    combine(&a.operator(osc), &b.operator(osc), &d)
}
