//! Unitary DFT: explicit matrices for small-n algebra, FFT plans for the
//! per-symbol transforms.

use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::numerics::linalg::ComplexMatrix;
use crate::scalar::{Real, C};

/// Unitary `n x n` DFT matrix, entry `(j, k) = exp(-2πi jk/n) / sqrt(n)`.
pub fn dft_matrix<T: Real>(n: usize) -> ComplexMatrix<T> {
    assert!(n >= 1, "dft size must be positive");
    let scale = T::one() / T::of_usize(n).sqrt();
    let step = -T::TAU() / T::of_usize(n);
    ComplexMatrix::from_fn(n, n, |j, k| {
        // reduce jk mod n first so large products keep full phase accuracy
        let phase = step * T::of_usize((j * k) % n);
        C::from_polar(scale, phase)
    })
}

/// Rows `idx` of the unitary DFT matrix, built directly.
pub fn partial_dft_matrix<T: Real>(n: usize, idx: &[usize]) -> ComplexMatrix<T> {
    let scale = T::one() / T::of_usize(n).sqrt();
    let step = -T::TAU() / T::of_usize(n);
    ComplexMatrix::from_fn(idx.len(), n, |r, k| {
        C::from_polar(scale, step * T::of_usize((idx[r] * k) % n))
    })
}

/// Cached forward/inverse FFT plans with unitary normalization.
#[derive(Clone)]
pub struct Dft<T: Real> {
    n: usize,
    scale: T,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> fmt::Debug for Dft<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Dft").field("n", &self.n).finish()
    }
}

impl<T: Real> Dft<T> {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "dft size must be positive");
        let mut planner = FftPlanner::new();
        Self {
            n,
            scale: T::one() / T::of_usize(n).sqrt(),
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `buf <- F buf`
    pub fn forward_in_place(&self, buf: &mut [C<T>]) {
        assert_eq!(buf.len(), self.n);
        self.forward.process(buf);
        buf.iter_mut().for_each(|z| *z = *z * self.scale);
    }

    /// `buf <- F^H buf`
    pub fn inverse_in_place(&self, buf: &mut [C<T>]) {
        assert_eq!(buf.len(), self.n);
        self.inverse.process(buf);
        buf.iter_mut().for_each(|z| *z = *z * self.scale);
    }

    pub fn forward(&self, x: &[C<T>]) -> Vec<C<T>> {
        let mut v = x.to_vec();
        self.forward_in_place(&mut v);
        v
    }

    pub fn inverse(&self, x: &[C<T>]) -> Vec<C<T>> {
        let mut v = x.to_vec();
        self.inverse_in_place(&mut v);
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linalg::norm_sqr;
    use crate::numerics::rng::SimRng;
    use crate::numerics::sample_circular_gaussian;

    #[test]
    fn size_one_and_two() {
        let f1 = dft_matrix::<f64>(1);
        assert_eq!(f1[(0, 0)], C::new(1.0, 0.0));
        let f2 = dft_matrix::<f64>(2);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let expect = [[h, h], [h, -h]];
        for j in 0..2 {
            for k in 0..2 {
                assert!((f2[(j, k)] - C::new(expect[j][k], 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn unitary_for_powers_of_two() {
        let mut n = 1;
        while n <= 256 {
            let f = dft_matrix::<f64>(n);
            let p = f.matmul(&f.adjoint()).unwrap();
            let err = p.max_abs_diff(&ComplexMatrix::identity(n));
            assert!(err < 1e-12, "n={n}: {err}");
            n *= 2;
        }
    }

    #[test]
    fn partial_rows_match_closed_form() {
        let sub = dft_matrix::<f64>(8).submatrix_rows(&[1, 3]).unwrap();
        for (r, &j) in [1usize, 3].iter().enumerate() {
            for k in 0..8 {
                let theta = -2.0 * std::f64::consts::PI * (j * k) as f64 / 8.0;
                let expect = C::new(theta.cos(), theta.sin()) / 8f64.sqrt();
                assert!((sub[(r, k)] - expect).norm() < 1e-14);
            }
        }
        assert!(partial_dft_matrix::<f64>(8, &[1, 3]).max_abs_diff(&sub) < 1e-15);
    }

    #[test]
    fn fft_matches_matrix_and_preserves_norm() {
        let mut rng = SimRng::new(11);
        for &n in &[8usize, 128, 100] {
            let x = sample_circular_gaussian::<f64>(&mut rng, n, 1.0);
            let dft = Dft::new(n);
            let fast = dft.forward(&x);
            let slow = dft_matrix::<f64>(n).matvec(&x).unwrap();
            assert!(crate::numerics::max_abs_diff(&fast, &slow) < 1e-12);
            assert!((norm_sqr(&fast).sqrt() - x.norm()).abs() < 1e-10);
            let back = dft.inverse(&fast);
            assert!(crate::numerics::max_abs_diff(&back, &x) < 1e-12);
        }
    }
}
