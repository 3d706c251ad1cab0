//! Unitary DFT of length `W` backed by `rustfft`, with a transform counter.
//!
//! `F x = FFT(x)/√W` and `Fᴴ x = IFFT_unnormalized(x)/√W`. The counter lets
//! tests pin the per-iteration transform budget of each algorithm.

use crate::scalar::{Complex, Real};
use rustfft::{Fft, FftPlanner};
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

pub struct UnitaryDft<S: Real> {
    len: usize,
    forward: Arc<dyn Fft<S>>,
    inverse: Arc<dyn Fft<S>>,
    scale: S,
    count: AtomicUsize,
}

impl<S: Real> UnitaryDft<S> {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
            scale: S::one() / S::of_usize(len).sqrt(),
            count: AtomicUsize::new(0),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// In place `x ← F x`.
    pub fn forward(&self, x: &mut [Complex<S>]) {
        debug_assert_eq!(x.len(), self.len);
        self.forward.process(x);
        self.rescale(x);
    }

    /// In place `x ← Fᴴ x`.
    pub fn inverse(&self, x: &mut [Complex<S>]) {
        debug_assert_eq!(x.len(), self.len);
        self.inverse.process(x);
        self.rescale(x);
    }

    /// Eigenvalues of the circulant matrix whose first column is `taps`
    /// (zero-padded to the transform length): the unnormalized DFT, `√W·F h`.
    pub fn circulant_eigenvalues(&self, taps: &[Complex<S>]) -> Vec<Complex<S>> {
        assert!(taps.len() <= self.len, "more taps than DFT bins");
        let mut buf = vec![Complex::new(S::zero(), S::zero()); self.len];
        buf[..taps.len()].copy_from_slice(taps);
        self.forward.process(&mut buf);
        buf
    }

    fn rescale(&self, x: &mut [Complex<S>]) {
        for v in x.iter_mut() {
            *v = v.scale(self.scale);
        }
        self.count.fetch_add(1, Ordering::Relaxed);
    }

    /// Number of `forward`/`inverse` calls so far.
    pub fn transforms(&self) -> usize {
        self.count.load(Ordering::Relaxed)
    }
}

impl<S: Real> fmt::Debug for UnitaryDft<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UnitaryDft")
            .field("len", &self.len)
            .field("transforms", &self.transforms())
            .finish()
    }
}

impl<S: Real> Clone for UnitaryDft<S> {
    fn clone(&self) -> Self {
        Self::new(self.len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn four_point_eigenvalues_by_hand() {
        let dft = UnitaryDft::<f64>::new(4);
        let ev = dft.circulant_eigenvalues(&[c(1.0, 0.0), c(1.0, 0.0)]);
        let expected = [c(2.0, 0.0), c(1.0, -1.0), c(0.0, 0.0), c(1.0, 1.0)];
        for (a, b) in ev.iter().zip(expected.iter()) {
            assert!((a - b).norm() < 1e-14, "{a} vs {b}");
        }
        // The eigenvalue pass does not count as a unitary transform.
        assert_eq!(dft.transforms(), 0);
    }

    #[test]
    fn unitary_round_trip_preserves_norm() {
        let dft = UnitaryDft::<f64>::new(8);
        let x: Vec<_> = (0..8).map(|i| c(i as f64, -(i as f64) / 3.0)).collect();
        let mut y = x.clone();
        dft.forward(&mut y);
        let nx: f64 = x.iter().map(|v| v.norm_sqr()).sum();
        let ny: f64 = y.iter().map(|v| v.norm_sqr()).sum();
        assert!((nx - ny).abs() < 1e-12 * nx);
        dft.inverse(&mut y);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).norm() < 1e-12);
        }
        assert_eq!(dft.transforms(), 2);
    }
}
