use crate::error::{domain, Result};
use crate::scalar::Real;

/// Uniformly sampled signal.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T> {
    pub t0: T,
    pub dt: T,
    pub values: Vec<T>,
}

impl<T: Real> TimeSeries<T> {
    pub fn new(t0: T, dt: T, values: Vec<T>) -> Result<Self> {
        if !(dt > T::zero() && dt.is_finite()) {
            return domain(format!("sampling interval must be positive, got {dt}"));
        }
        if values.is_empty() {
            return domain("time series must have at least one sample");
        }
        Ok(Self { t0, dt, values })
    }

    /// Samples `f` at `n` instants starting at `t0`.
    pub fn from_fn(t0: T, dt: T, n: usize, mut f: impl FnMut(T) -> T) -> Result<Self> {
        let values = (0..n).map(|i| f(t0 + dt * T::of_usize(i))).collect();
        Self::new(t0, dt, values)
    }

    pub fn zeros(t0: T, dt: T, n: usize) -> Result<Self> {
        Self::new(t0, dt, vec![T::zero(); n])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn time(&self, i: usize) -> T {
        self.t0 + self.dt * T::of_usize(i)
    }

    pub fn times(&self) -> Vec<T> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }

    pub fn t_end(&self) -> T {
        self.time(self.len().saturating_sub(1))
    }

    pub fn sample_rate(&self) -> T {
        T::one() / self.dt
    }

    /// Same grid, new values.
    pub fn with_values(&self, values: Vec<T>) -> Self {
        assert_eq!(values.len(), self.len(), "value count must match grid");
        Self {
            t0: self.t0,
            dt: self.dt,
            values,
        }
    }

    pub fn map(&self, mut f: impl FnMut(T) -> T) -> Self {
        self.with_values(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, s: T) -> Self {
        self.map(|v| v * s)
    }

    /// True when both series share `t0`, `dt` and length (to rounding).
    pub fn same_grid(&self, other: &Self) -> bool {
        let tol = self.dt * T::of(1e-9);
        self.len() == other.len()
            && (self.t0 - other.t0).abs() <= tol
            && (self.dt - other.dt).abs() <= tol
    }

    /// Linear interpolation at `t`, clamped to the end samples.
    pub fn interpolate(&self, t: T) -> T {
        let x = (t - self.t0) / self.dt;
        if x <= T::zero() {
            return self.values[0];
        }
        let last = self.len() - 1;
        let i = x.floor().to_usize().unwrap_or(last);
        if i >= last {
            return self.values[last];
        }
        let w = x - T::of_usize(i);
        self.values[i] * (T::one() - w) + self.values[i + 1] * w
    }

    /// Resamples onto the grid of `target` by linear interpolation.
    pub fn resample_like(&self, target: &Self) -> Self {
        target.with_values((0..target.len()).map(|i| self.interpolate(target.time(i))).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(TimeSeries::new(0.0, 0.0, vec![1.0]).is_err());
        assert!(TimeSeries::new(0.0, -0.1, vec![1.0]).is_err());
        assert!(TimeSeries::<f64>::new(0.0, 0.1, vec![]).is_err());
    }

    #[test]
    fn interpolation_and_grid() {
        let s = TimeSeries::from_fn(1.0, 0.5, 5, |t: f64| 2.0 * t).unwrap();
        assert_eq!(s.t_end(), 3.0);
        assert!((s.interpolate(1.75) - 3.5).abs() < 1e-12);
        assert_eq!(s.interpolate(-4.0), 2.0);
        assert_eq!(s.interpolate(9.0), 6.0);
        let fine = TimeSeries::zeros(1.0, 0.25, 9).unwrap();
        let r = s.resample_like(&fine);
        assert!((r.values[3] - 3.5).abs() < 1e-12);
        assert!(!r.same_grid(&s));
    }
}
