//! Box-constrained BFGS used for marginal-likelihood ascent.
//!
//! Minimizes a smooth objective with an analytic gradient. Components sitting
//! on a bound with the gradient pushing outward are frozen for that iteration
//! (projected BFGS), which is enough for the handful of log-hyperparameters
//! this crate optimizes.

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Convergence threshold on the ∞-norm of the projected gradient.
    pub grad_tol: f64,
    /// Largest ∞-norm of a trial step.
    pub max_step: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            grad_tol: 1e-6,
            max_step: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfgsResult<T> {
    pub x: Vec<T>,
    pub f: T,
    pub grad: Vec<T>,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimizes `objective` inside `[lower, upper]`. The objective returns `None`
/// when it cannot be evaluated at a point; the line search treats that as an
/// infinitely bad value. Returns `None` if the starting point fails.
pub fn minimize_bfgs<T, F>(
    mut objective: F,
    x0: &[T],
    lower: &[T],
    upper: &[T],
    opts: &BfgsOptions,
) -> Option<BfgsResult<T>>
where
    T: Real,
    F: FnMut(&[T]) -> Option<(T, Vec<T>)>,
{
    let n = x0.len();
    assert!(lower.len() == n && upper.len() == n);
    let clamp = |x: &mut [T]| {
        for i in 0..n {
            x[i] = x[i].max(lower[i]).min(upper[i]);
        }
    };
    let mut x = x0.to_vec();
    clamp(&mut x);
    let mut evaluations = 1;
    let (mut f, mut g) = objective(&x)?;
    if !f.is_finite() {
        return None;
    }
    let mut h = identity::<T>(n);
    let mut fresh_h = true;
    let mut converged = false;
    let mut iterations = 0;
    let tol = T::of(opts.grad_tol);

    while iterations < opts.max_iter {
        let active: Vec<bool> = (0..n)
            .map(|i| (x[i] <= lower[i] && g[i] > T::zero()) || (x[i] >= upper[i] && g[i] < T::zero()))
            .collect();
        let pg_norm = (0..n)
            .filter(|&i| !active[i])
            .fold(T::zero(), |m, i| m.max(g[i].abs()));
        if pg_norm <= tol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut d = direction(&h, &g, &active);
        let slope: T = (0..n).map(|i| g[i] * d[i]).sum();
        if !(slope < T::zero()) {
            h = identity(n);
            fresh_h = true;
            d = direction(&h, &g, &active);
        }
        let dmax = d.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let cap = T::of(opts.max_step);
        if dmax > cap {
            let s = cap / dmax;
            d.iter_mut().for_each(|v| *v *= s);
        }

        let mut alpha = T::one();
        let mut accepted = None;
        for _ in 0..40 {
            let mut xn: Vec<T> = (0..n).map(|i| x[i] + alpha * d[i]).collect();
            clamp(&mut xn);
            evaluations += 1;
            if let Some((fnew, gnew)) = objective(&xn) {
                let decrease: T = (0..n).map(|i| g[i] * (xn[i] - x[i])).sum();
                let armijo = f + T::of(1e-4) * decrease.min(T::zero());
                if fnew.is_finite() && fnew <= armijo {
                    accepted = Some((xn, fnew, gnew));
                    break;
                }
            }
            alpha *= T::of(0.5);
        }

        let Some((xn, fnew, gnew)) = accepted else {
            if fresh_h {
                break;
            }
            h = identity(n);
            fresh_h = true;
            continue;
        };

        let s: Vec<T> = (0..n).map(|i| xn[i] - x[i]).collect();
        let y: Vec<T> = (0..n).map(|i| gnew[i] - g[i]).collect();
        let sy: T = (0..n).map(|i| s[i] * y[i]).sum();
        let yy: T = y.iter().map(|&v| v * v).sum();
        let ss: T = s.iter().map(|&v| v * v).sum();
        if sy > T::of(1e-12) * (ss * yy).sqrt() && sy > T::zero() {
            if fresh_h {
                let scale = sy / yy;
                h = identity(n);
                for i in 0..n {
                    h[i * n + i] = scale;
                }
                fresh_h = false;
            }
            bfgs_update(&mut h, &s, &y, sy);
        }
        let stalled = (f - fnew).abs() <= T::epsilon() * (T::one() + f.abs());
        x = xn;
        f = fnew;
        g = gnew;
        if stalled && s.iter().all(|v| v.abs() <= T::epsilon().sqrt()) {
            break;
        }
    }

    Some(BfgsResult {
        x,
        f,
        grad: g,
        iterations,
        evaluations,
        converged,
    })
}

fn identity<T: Real>(n: usize) -> Vec<T> {
    let mut h = vec![T::zero(); n * n];
    for i in 0..n {
        h[i * n + i] = T::one();
    }
    h
}

fn direction<T: Real>(h: &[T], g: &[T], active: &[bool]) -> Vec<T> {
    let n = g.len();
    (0..n)
        .map(|i| {
            if active[i] {
                return T::zero();
            }
            -(0..n)
                .filter(|&j| !active[j])
                .map(|j| h[i * n + j] * g[j])
                .sum::<T>()
        })
        .collect()
}

/// Inverse-Hessian update `H ← (I − ρsyᵀ) H (I − ρysᵀ) + ρssᵀ`.
fn bfgs_update<T: Real>(h: &mut [T], s: &[T], y: &[T], sy: T) {
    let n = s.len();
    let rho = T::one() / sy;
    let hy: Vec<T> = (0..n).map(|i| (0..n).map(|j| h[i * n + j] * y[j]).sum()).collect();
    let yhy: T = (0..n).map(|i| y[i] * hy[i]).sum();
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += (T::one() + rho * yhy) * rho * s[i] * s[j]
                - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> Option<(f64, Vec<f64>)> {
        let (a, b) = (x[0], x[1]);
        let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = vec![
            -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
            200.0 * (b - a * a),
        ];
        Some((f, g))
    }

    #[test]
    fn solves_rosenbrock() {
        let r = minimize_bfgs(
            rosenbrock,
            &[-1.2, 1.0],
            &[-10.0, -10.0],
            &[10.0, 10.0],
            &BfgsOptions::default(),
        )
        .unwrap();
        assert!(r.converged, "{r:?}");
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn respects_bounds() {
        // Unconstrained minimum at (3, -2), box keeps x0 <= 1.
        let quad = |x: &[f64]| {
            Some((
                (x[0] - 3.0).powi(2) + (x[1] + 2.0).powi(2),
                vec![2.0 * (x[0] - 3.0), 2.0 * (x[1] + 2.0)],
            ))
        };
        let r = minimize_bfgs(quad, &[0.0, 0.0], &[-5.0, -5.0], &[1.0, 5.0], &BfgsOptions::default())
            .unwrap();
        assert!(r.converged);
        assert_eq!(r.x[0], 1.0);
        assert!((r.x[1] + 2.0).abs() < 1e-7);
    }

    #[test]
    fn failed_start_returns_none() {
        let bad = |_: &[f64]| None;
        assert!(minimize_bfgs(bad, &[0.0], &[-1.0], &[1.0], &BfgsOptions::default()).is_none());
    }
}
