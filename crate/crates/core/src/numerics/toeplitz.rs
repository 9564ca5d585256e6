//! Hermitian positive definite Toeplitz systems in `O(M²)`.
//!
//! Levinson recursion yields the first column of the inverse; the
//! Gohberg–Semencul formula then expresses `T^{-1}` through two triangular
//! Toeplitz factors, which is all the SBL E-step needs.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::numerics::linalg::PIVOT_FLOOR;
use crate::scalar::{Real, C};

/// `T^{-1} = (1/p) [L(a) L(a)^H - L(u) L(u)^H]` with `L(v)` lower-triangular
/// Toeplitz with first column `v`.
#[derive(Debug, Clone)]
pub struct ToeplitzInverse<T> {
    a: Vec<C<T>>,
    u: Vec<C<T>>,
    p: T,
    log_det: T,
}

impl<T: Real> ToeplitzInverse<T> {
    /// `c[d] = T_{j+d, j}`; the upper triangle is the conjugate.
    pub fn factor(c: &[C<T>]) -> Result<Self> {
        let m = c.len();
        if m == 0 {
            return Err(Error::InvalidParameter("empty Toeplitz column".into()));
        }
        let floor = T::of(PIVOT_FLOOR) * c[0].re.abs();
        let mut p = c[0].re;
        if !(p > floor) {
            return Err(Error::Singular { row: 0, pivot: p.as_f64(), floor: floor.as_f64() });
        }
        let mut log_det = p.ln();
        // a: forward predictor with a[0] = 1 and T a = [p, 0, ..., 0]
        let mut a = vec![C::zero(); m];
        a[0] = C::new(T::one(), T::zero());
        let mut prev = a.clone();
        for n in 1..m {
            let eps: C<T> = (0..n).map(|k| c[n - k] * a[k]).sum();
            let kappa = eps / p;
            prev[..n].copy_from_slice(&a[..n]);
            // a' = [a; 0] - κ [0; J conj(a)]
            for k in 1..=n {
                a[k] = prev[k] - kappa * prev[n - k].conj();
            }
            p = p * (T::one() - kappa.norm_sqr());
            if !(p > floor) {
                return Err(Error::Singular { row: n, pivot: p.as_f64(), floor: floor.as_f64() });
            }
            log_det += p.ln();
        }
        // u = Z J conj(a)
        let mut u = vec![C::zero(); m];
        for k in 1..m {
            u[k] = a[m - k].conj();
        }
        Ok(Self { a, u, p, log_det })
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn log_det(&self) -> T {
        self.log_det
    }

    /// `T^{-1} b`
    pub fn solve(&self, b: &[C<T>]) -> Vec<C<T>> {
        let m = self.dim();
        assert_eq!(b.len(), m, "Toeplitz solve dimension");
        let mut out = vec![C::zero(); m];
        for (v, sign) in [(&self.a, T::one()), (&self.u, -T::one())] {
            // w = L(v)^H b, then out += sign L(v) w
            let w: Vec<C<T>> = (0..m)
                .map(|j| (j..m).map(|i| v[i - j].conj() * b[i]).sum())
                .collect();
            for i in 0..m {
                let s: C<T> = (0..=i).map(|j| v[i - j] * w[j]).sum();
                out[i] += s * sign;
            }
        }
        let inv = T::one() / self.p;
        out.iter_mut().for_each(|z| *z = *z * inv);
        out
    }

    /// `s[d] = Σ_{j-k=d} (T^{-1})_{jk}` for `d = 0..M`; negative offsets are
    /// the conjugates.
    pub fn diagonal_sums(&self) -> Vec<C<T>> {
        let m = self.dim();
        let inv = T::one() / self.p;
        (0..m)
            .map(|d| {
                let mut s = C::zero();
                for t in 0..m - d {
                    let w = T::of_usize(m - d - t);
                    s += (self.a[t + d] * self.a[t].conj() - self.u[t + d] * self.u[t].conj()) * w;
                }
                s * inv
            })
            .collect()
    }
}
