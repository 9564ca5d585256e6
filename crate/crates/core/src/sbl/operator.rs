//! Sensing operators `Φ` (M x N) for the SBL estimators.
//!
//! The EM loop only touches `Φ` through a handful of products, so a
//! partial-DFT `Φ = F_I` can serve them from FFTs: `Φ Γ Φ^H` depends only on
//! row-index differences, and so does the diagonal of `Φ^H A Φ`.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::numerics::{norm_sqr, partial_dft_matrix, Cholesky, ComplexMatrix, Dft, ToeplitzInverse};
use crate::scalar::{Real, C};

/// Products with `C^{-1}`, `C = σ² I + Φ Γ Φ^H`, used by the E-step.
#[derive(Debug, Clone)]
pub struct CovarianceTerms<T> {
    /// `C^{-1} t`
    pub solved: Vec<C<T>>,
    /// `t^H C^{-1} t`
    pub quad: T,
    pub log_det: T,
    /// `diag(Φ^H C^{-1} Φ)`
    pub q: Vec<T>,
}

pub trait SensingOperator<T: Real> {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    /// `Φ w`
    fn apply(&self, w: &[C<T>]) -> Vec<C<T>>;
    /// `Φ^H v`
    fn apply_adjoint(&self, v: &[C<T>]) -> Vec<C<T>>;
    /// `Φ diag(γ) Φ^H`
    fn weighted_gram(&self, gamma: &[T]) -> ComplexMatrix<T>;
    /// Real part of `diag(Φ^H A Φ)` for Hermitian `A`.
    fn diag_quadratic(&self, a: &ComplexMatrix<T>) -> Vec<T>;
    /// `Φ^H φ_j`, column `j` of the Gram matrix.
    fn gram_column(&self, j: usize) -> Vec<C<T>>;
    fn to_dense(&self) -> ComplexMatrix<T>;

    /// Dense Cholesky by default.
    fn covariance_terms(&self, t: &[C<T>], gamma: &[T], sigma2: T) -> Result<CovarianceTerms<T>> {
        cholesky_terms(self, t, gamma, sigma2)
    }
}

impl<T: Real> SensingOperator<T> for ComplexMatrix<T> {
    fn rows(&self) -> usize {
        ComplexMatrix::rows(self)
    }

    fn cols(&self) -> usize {
        ComplexMatrix::cols(self)
    }

    fn apply(&self, w: &[C<T>]) -> Vec<C<T>> {
        self.matvec(w).expect("operator dimension")
    }

    fn apply_adjoint(&self, v: &[C<T>]) -> Vec<C<T>> {
        self.adjoint_matvec(v).expect("operator dimension")
    }

    fn weighted_gram(&self, gamma: &[T]) -> ComplexMatrix<T> {
        let (m, n) = (self.rows(), self.cols());
        let mut out = ComplexMatrix::zeros(m, m);
        for j in 0..m {
            let rj = self.row(j);
            for k in 0..=j {
                let rk = self.row(k);
                let mut s = C::zero();
                for i in 0..n {
                    if gamma[i] > T::zero() {
                        s += rj[i] * rk[i].conj() * gamma[i];
                    }
                }
                out[(j, k)] = s;
                out[(k, j)] = s.conj();
            }
        }
        out
    }

    fn diag_quadratic(&self, a: &ComplexMatrix<T>) -> Vec<T> {
        let (m, n) = (self.rows(), self.cols());
        // (A Φ)_{:, i} then φ_i^H (A φ_i)
        let ap = a.matmul(self).expect("operator dimension");
        (0..n)
            .map(|i| {
                (0..m)
                    .map(|j| (self[(j, i)].conj() * ap[(j, i)]).re)
                    .sum()
            })
            .collect()
    }

    fn gram_column(&self, j: usize) -> Vec<C<T>> {
        self.apply_adjoint(&self.column(j))
    }

    fn to_dense(&self) -> ComplexMatrix<T> {
        self.clone()
    }
}

/// Rows `I` of the unitary `N`-point DFT matrix, applied via FFT.
#[derive(Debug, Clone)]
pub struct PartialDft<T: Real> {
    n: usize,
    rows: Vec<usize>,
    dft: Dft<T>,
    /// `diff[j*m + k] = (rows[j] - rows[k]) mod n`
    diff: Vec<usize>,
    /// Gram generator: `(Φ^H Φ)_{ij} = gram[(i - j) mod n]`.
    gram: Vec<C<T>>,
    /// Positions in `rows` ordered as `r0, r0+1, ...` (mod n) when the rows
    /// form one circular band; `C` is then Toeplitz.
    band: Option<Vec<usize>>,
}

impl<T: Real> PartialDft<T> {
    pub fn new(n: usize, rows: &[usize]) -> Result<Self> {
        Self::with_dft(Dft::new(n), rows)
    }

    pub fn with_dft(dft: Dft<T>, rows: &[usize]) -> Result<Self> {
        let n = dft.len();
        if let Some(&bad) = rows.iter().find(|&&r| r >= n) {
            return Err(Error::IndexOutOfRange { index: bad, len: n });
        }
        if rows.is_empty() {
            return Err(Error::InvalidParameter("partial DFT with no rows".into()));
        }
        let m = rows.len();
        let mut diff = Vec::with_capacity(m * m);
        for &rj in rows {
            for &rk in rows {
                diff.push((rj + n - rk) % n);
            }
        }
        // gram[d] = (1/n) Σ_r exp(2πi r d / n) = (1/sqrt n) (F^H 1_I)[d]
        let mut ind = vec![C::zero(); n];
        for &r in rows {
            ind[r] = C::new(T::one(), T::zero());
        }
        dft.inverse_in_place(&mut ind);
        let s = T::one() / T::of_usize(n).sqrt();
        let gram = ind.into_iter().map(|z| z * s).collect();
        Ok(Self {
            n,
            rows: rows.to_vec(),
            dft,
            diff,
            gram,
            band: circular_band(n, rows),
        })
    }

    pub fn row_indices(&self) -> &[usize] {
        &self.rows
    }

    pub fn dft(&self) -> &Dft<T> {
        &self.dft
    }

    /// Whether the E-step takes the Toeplitz path.
    pub fn is_band(&self) -> bool {
        self.band.is_some()
    }

    fn toeplitz_terms(&self, band: &[usize], t: &[C<T>], gamma: &[T], sigma2: T) -> Result<CovarianceTerms<T>> {
        let m = band.len();
        let s = T::one() / T::of_usize(self.n).sqrt();
        let mut g: Vec<C<T>> = gamma.iter().map(|&x| C::new(x, T::zero())).collect();
        self.dft.forward_in_place(&mut g);
        let mut col: Vec<C<T>> = g[..m].iter().map(|z| z * s).collect();
        col[0] += C::new(sigma2, T::zero());
        let f = ToeplitzInverse::factor(&col)?;
        let tb: Vec<C<T>> = band.iter().map(|&p| t[p]).collect();
        let xb = f.solve(&tb);
        let mut solved = vec![C::zero(); m];
        for (&p, &x) in band.iter().zip(&xb) {
            solved[p] = x;
        }
        let quad = tb.iter().zip(&xb).map(|(a, b)| (a.conj() * b).re).sum();
        let sums = f.diagonal_sums();
        let mut d = vec![C::zero(); self.n];
        d[0] = sums[0];
        for k in 1..m {
            d[k] += sums[k];
            d[self.n - k] += sums[k].conj();
        }
        self.dft.inverse_in_place(&mut d);
        Ok(CovarianceTerms {
            solved,
            quad,
            log_det: f.log_det(),
            q: d.into_iter().map(|z| z.re * s).collect(),
        })
    }
}

fn circular_band(n: usize, rows: &[usize]) -> Option<Vec<usize>> {
    let mut pos = vec![usize::MAX; n];
    for (i, &r) in rows.iter().enumerate() {
        if pos[r] != usize::MAX {
            return None;
        }
        pos[r] = i;
    }
    let start = if rows.len() == n {
        0
    } else {
        *rows.iter().find(|&&r| pos[(r + n - 1) % n] == usize::MAX)?
    };
    (0..rows.len())
        .map(|j| Some(pos[(start + j) % n]).filter(|&p| p != usize::MAX))
        .collect()
}

impl<T: Real> SensingOperator<T> for PartialDft<T> {
    fn rows(&self) -> usize {
        self.rows.len()
    }

    fn cols(&self) -> usize {
        self.n
    }

    fn apply(&self, w: &[C<T>]) -> Vec<C<T>> {
        let full = self.dft.forward(w);
        self.rows.iter().map(|&r| full[r]).collect()
    }

    fn apply_adjoint(&self, v: &[C<T>]) -> Vec<C<T>> {
        let mut full = vec![C::zero(); self.n];
        for (&r, &x) in self.rows.iter().zip(v) {
            full[r] = x;
        }
        self.dft.inverse_in_place(&mut full);
        full
    }

    fn weighted_gram(&self, gamma: &[T]) -> ComplexMatrix<T> {
        // (Φ Γ Φ^H)_{jk} = (1/sqrt n) (F γ)[(r_j - r_k) mod n]
        let mut g: Vec<C<T>> = gamma.iter().map(|&x| C::new(x, T::zero())).collect();
        self.dft.forward_in_place(&mut g);
        let s = T::one() / T::of_usize(self.n).sqrt();
        let m = self.rows.len();
        let mut out = ComplexMatrix::zeros(m, m);
        for j in 0..m {
            for k in 0..m {
                out[(j, k)] = g[self.diff[j * m + k]] * s;
            }
        }
        out
    }

    fn diag_quadratic(&self, a: &ComplexMatrix<T>) -> Vec<T> {
        // Σ_{jk} conj(F_{r_j i}) A_{jk} F_{r_k i} = (1/n) Σ_d D[d] e^{2πi d i / n}
        let m = self.rows.len();
        let mut d = vec![C::zero(); self.n];
        for j in 0..m {
            for k in 0..m {
                d[self.diff[j * m + k]] += a[(j, k)];
            }
        }
        self.dft.inverse_in_place(&mut d);
        let s = T::one() / T::of_usize(self.n).sqrt();
        d.into_iter().map(|z| z.re * s).collect()
    }

    fn gram_column(&self, j: usize) -> Vec<C<T>> {
        (0..self.n).map(|i| self.gram[(i + self.n - j) % self.n]).collect()
    }

    fn to_dense(&self) -> ComplexMatrix<T> {
        partial_dft_matrix(self.n, &self.rows)
    }

    fn covariance_terms(&self, t: &[C<T>], gamma: &[T], sigma2: T) -> Result<CovarianceTerms<T>> {
        match &self.band {
            Some(band) => match self.toeplitz_terms(band, t, gamma, sigma2) {
                Ok(terms) => Ok(terms),
                // Levinson can lose definiteness before Cholesky does
                Err(Error::Singular { .. }) => cholesky_terms(self, t, gamma, sigma2),
                Err(e) => Err(e),
            },
            None => cholesky_terms(self, t, gamma, sigma2),
        }
    }
}

/// `C^{-1}` products through a dense Cholesky factor of `C`.
pub fn cholesky_terms<T: Real, O: SensingOperator<T> + ?Sized>(
    op: &O,
    t: &[C<T>],
    gamma: &[T],
    sigma2: T,
) -> Result<CovarianceTerms<T>> {
    let mut c = op.weighted_gram(gamma);
    for j in 0..op.rows() {
        c[(j, j)] += C::new(sigma2, T::zero());
    }
    let chol = Cholesky::factor(&c)?;
    let mut u = t.to_vec();
    chol.forward_in_place(&mut u);
    let quad = norm_sqr(&u);
    chol.backward_in_place(&mut u);
    Ok(CovarianceTerms {
        solved: u,
        quad,
        log_det: chol.log_det(),
        q: op.diag_quadratic(&chol.inverse()),
    })
}
