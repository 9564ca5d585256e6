//! Complex linear algebra, DFT matrices and reproducible sampling.

pub mod dft;
pub mod linalg;
pub mod rng;
pub mod toeplitz;

use rand_distr::{Distribution, StandardNormal};

pub use dft::{dft_matrix, partial_dft_matrix, Dft};
pub use linalg::{
    dot_h, hermitian_solve, max_abs_diff, norm_sqr, Cholesky, ComplexMatrix, ComplexVector,
};
pub use rng::SimRng;
pub use toeplitz::ToeplitzInverse;

use crate::scalar::{Real, C};

/// `n` i.i.d. circularly-symmetric complex Gaussian samples with
/// `E|z|^2 = variance` (each quadrature gets `variance / 2`).
pub fn sample_circular_gaussian<T: Real>(rng: &mut SimRng, n: usize, variance: T) -> ComplexVector<T> {
    assert!(variance >= T::zero(), "variance must be non-negative");
    let sd = (variance / T::of(2.0)).sqrt();
    (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C::new(T::of(re) * sd, T::of(im) * sd)
        })
        .collect::<Vec<_>>()
        .into()
}

/// One circular Gaussian sample of unit variance.
#[inline]
pub fn unit_circular<T: Real>(rng: &mut SimRng) -> C<T> {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    C::new(T::of(re * s), T::of(im * s))
}
