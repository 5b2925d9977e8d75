//! Scalar abstraction shared by every numerical module.
//!
//! All of the math is written against [`Real`], which is implemented for `f32`
//! and `f64`. The trait also carries the FFT hook so that spectral code stays
//! generic without dragging `rustfft`'s own numeric bounds (which overlap with
//! `num_traits::Float` method names) into every signature.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftPlanner;

/// Floating point scalar used throughout the crate (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// In-place complex FFT. The inverse transform is unnormalized.
    fn fft_in_place(buf: &mut [Complex<Self>], inverse: bool);

    /// Lossy conversion from an `f64` literal or parameter.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 value representable in scalar type")
    }

    /// Conversion from a count.
    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            fn fft_in_place(buf: &mut [Complex<Self>], inverse: bool) {
                if buf.is_empty() {
                    return;
                }
                let mut planner = FftPlanner::<$t>::new();
                let fft = if inverse {
                    planner.plan_fft_inverse(buf.len())
                } else {
                    planner.plan_fft_forward(buf.len())
                };
                fft.process(buf);
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

/// Forward FFT of a real signal, returned as a full complex spectrum.
pub fn fft_real<T: Real>(x: &[T]) -> Vec<Complex<T>> {
    let mut buf: Vec<Complex<T>> = x.iter().map(|&v| Complex::new(v, T::zero())).collect();
    T::fft_in_place(&mut buf, false);
    buf
}

/// Normalized inverse FFT (so that `ifft(fft(x)) == x`).
pub fn ifft<T: Real>(spectrum: &[Complex<T>]) -> Vec<Complex<T>> {
    let mut buf = spectrum.to_vec();
    T::fft_in_place(&mut buf, true);
    let scale = T::one() / T::of_usize(buf.len().max(1));
    for c in &mut buf {
        *c = *c * scale;
    }
    buf
}

/// Root mean square of a slice (zero for an empty slice).
pub fn rms<T: Real>(x: &[T]) -> T {
    if x.is_empty() {
        return T::zero();
    }
    (x.iter().map(|&v| v * v).sum::<T>() / T::of_usize(x.len())).sqrt()
}

pub fn mean<T: Real>(x: &[T]) -> T {
    if x.is_empty() {
        return T::zero();
    }
    x.iter().copied().sum::<T>() / T::of_usize(x.len())
}

/// Population standard deviation.
pub fn std_dev<T: Real>(x: &[T]) -> T {
    if x.is_empty() {
        return T::zero();
    }
    let m = mean(x);
    (x.iter().map(|&v| (v - m) * (v - m)).sum::<T>() / T::of_usize(x.len())).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fft_round_trip_f32_and_f64() {
        let x64: Vec<f64> = (0..37).map(|i| (i as f64 * 0.3).sin() + 0.1 * i as f64).collect();
        let back = ifft(&fft_real(&x64));
        for (a, b) in x64.iter().zip(&back) {
            assert!((a - b.re).abs() < 1e-12);
            assert!(b.im.abs() < 1e-12);
        }
        let x32: Vec<f32> = x64.iter().map(|&v| v as f32).collect();
        let back = ifft(&fft_real(&x32));
        for (a, b) in x32.iter().zip(&back) {
            assert!((a - b.re).abs() < 1e-4);
        }
    }

    #[test]
    fn moments() {
        let x = [1.0, -1.0, 1.0, -1.0];
        assert_eq!(rms(&x), 1.0);
        assert_eq!(mean(&x), 0.0);
        assert_eq!(std_dev(&x), 1.0);
        assert_eq!(rms::<f64>(&[]), 0.0);
    }
}
