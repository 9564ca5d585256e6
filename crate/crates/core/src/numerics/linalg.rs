//! Dense complex vectors and matrices plus a Hermitian (Cholesky) solver.

use std::ops::{Deref, DerefMut, Index, IndexMut};

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{abs2, Real, C};

/// Dense complex column vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComplexVector<T>(Vec<C<T>>);

impl<T: Real> ComplexVector<T> {
    /// Wraps `data`, rejecting empty or non-finite input.
    pub fn new(data: Vec<C<T>>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::InvalidParameter("empty vector".into()));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("vector"));
        }
        Ok(Self(data))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![C::zero(); n])
    }

    pub fn from_real(re: &[T]) -> Self {
        Self(re.iter().map(|&x| C::new(x, T::zero())).collect())
    }

    pub fn into_inner(self) -> Vec<C<T>> {
        self.0
    }

    pub fn as_slice(&self) -> &[C<T>] {
        &self.0
    }

    pub fn norm_sqr(&self) -> T {
        norm_sqr(&self.0)
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    /// Elements at `idx`, in the order given.
    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        let mut out = Vec::with_capacity(idx.len());
        for &i in idx {
            out.push(*self.0.get(i).ok_or(Error::IndexOutOfRange {
                index: i,
                len: self.0.len(),
            })?);
        }
        Ok(Self(out))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl<T> From<Vec<C<T>>> for ComplexVector<T> {
    fn from(v: Vec<C<T>>) -> Self {
        Self(v)
    }
}

impl<T> Deref for ComplexVector<T> {
    type Target = [C<T>];
    fn deref(&self) -> &[C<T>] {
        &self.0
    }
}

impl<T> DerefMut for ComplexVector<T> {
    fn deref_mut(&mut self) -> &mut [C<T>] {
        &mut self.0
    }
}

pub fn norm_sqr<T: Real>(v: &[C<T>]) -> T {
    v.iter().map(|&z| abs2(z)).sum()
}

/// `a^H b`
pub fn dot_h<T: Real>(a: &[C<T>], b: &[C<T>]) -> C<T> {
    a.iter()
        .zip(b)
        .fold(C::zero(), |acc, (x, y)| acc + x.conj() * y)
}

/// Largest element-wise modulus of `a - b`.
pub fn max_abs_diff<T: Real>(a: &[C<T>], b: &[C<T>]) -> T {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(T::zero(), T::max)
}

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<C<T>>,
}

impl<T: Real> ComplexMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C<T>>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter("matrix with zero dimension".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "matrix data",
                expected: rows * cols,
                got: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("matrix"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn diagonal(d: &[C<T>]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[C<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C<T>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn as_slice(&self) -> &[C<T>] {
        &self.data
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                context: "matrix add",
                expected: self.rows * self.cols,
                got: other.rows * other.cols,
            });
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                context: "matmul",
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[C<T>]) -> Result<Vec<C<T>>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                context: "matvec",
                expected: self.cols,
                got: v.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(C::zero(), |acc, (a, b)| acc + a * b)
            })
            .collect())
    }

    /// `self^H v`
    pub fn adjoint_matvec(&self, v: &[C<T>]) -> Result<Vec<C<T>>> {
        if v.len() != self.rows {
            return Err(Error::DimensionMismatch {
                context: "adjoint matvec",
                expected: self.rows,
                got: v.len(),
            });
        }
        let mut out = vec![C::zero(); self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a.conj() * vi;
            }
        }
        Ok(out)
    }

    /// Rows selected by `idx`, in the order of `idx`.
    pub fn submatrix_rows(&self, idx: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            if i >= self.rows {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    len: self.rows,
                });
            }
            data.extend_from_slice(self.row(i));
        }
        Ok(Self {
            rows: idx.len(),
            cols: self.cols,
            data,
        })
    }

    /// Columns selected by `idx`, in the order of `idx`.
    pub fn submatrix_cols(&self, idx: &[usize]) -> Result<Self> {
        if let Some(&bad) = idx.iter().find(|&&j| j >= self.cols) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                len: self.cols,
            });
        }
        Ok(Self::from_fn(self.rows, idx.len(), |i, j| self[(i, idx[j])]))
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        max_abs_diff(&self.data, &other.data)
    }

    pub fn trace(&self) -> C<T> {
        (0..self.rows.min(self.cols)).fold(C::zero(), |acc, i| acc + self[(i, i)])
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl<T> Index<(usize, usize)> for ComplexMatrix<T> {
    type Output = C<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for ComplexMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.data[i * self.cols + j]
    }
}

/// Pivots below this fraction of the mean diagonal are treated as singular.
pub const PIVOT_FLOOR: f64 = 1e-14;

/// Lower-triangular Cholesky factor `A = L L^H` of a Hermitian positive
/// definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    n: usize,
    // row-major lower triangle, full n*n storage
    l: Vec<C<T>>,
}

impl<T: Real> Cholesky<T> {
    pub fn factor(a: &ComplexMatrix<T>) -> Result<Self> {
        if a.rows != a.cols {
            return Err(Error::DimensionMismatch {
                context: "cholesky (square)",
                expected: a.rows,
                got: a.cols,
            });
        }
        let n = a.rows;
        let scale = (0..n).map(|i| a[(i, i)].re.abs()).sum::<T>() / T::of_usize(n.max(1));
        let floor = T::of(PIVOT_FLOOR) * scale;
        let mut l = a.data.clone();
        let mut pivot_row = vec![C::<T>::zero(); n];
        for j in 0..n {
            let mut d = l[j * n + j].re;
            for z in &l[j * n..j * n + j] {
                d -= abs2(*z);
            }
            if !(d > floor) {
                return Err(Error::Singular {
                    row: j,
                    pivot: d.as_f64(),
                    floor: floor.as_f64(),
                });
            }
            let djj = d.sqrt();
            l[j * n + j] = C::new(djj, T::zero());
            for z in &mut l[j * n + j + 1..(j + 1) * n] {
                *z = C::zero();
            }
            pivot_row[..j].copy_from_slice(&l[j * n..j * n + j]);
            let inv = T::one() / djj;
            for i in j + 1..n {
                let row_i = &mut l[i * n..(i + 1) * n];
                let mut s = row_i[j];
                for (a, b) in row_i[..j].iter().zip(&pivot_row[..j]) {
                    s -= a * b.conj();
                }
                row_i[j] = s * inv;
            }
        }
        Ok(Self { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> C<T> {
        self.l[i * self.n + j]
    }

    /// Solves `L y = b` in place.
    pub fn forward_in_place(&self, b: &mut [C<T>]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            let mut s = b[i];
            for (a, x) in row.iter().zip(&b[..i]) {
                s -= a * x;
            }
            b[i] = s / self.at(i, i).re;
        }
    }

    /// Solves `L^H x = y` in place.
    pub fn backward_in_place(&self, b: &mut [C<T>]) {
        let n = self.n;
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= self.at(k, i).conj() * b[k];
            }
            b[i] = s / self.at(i, i).re;
        }
    }

    pub fn solve_vec(&self, b: &[C<T>]) -> Result<Vec<C<T>>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch {
                context: "cholesky solve",
                expected: self.n,
                got: b.len(),
            });
        }
        let mut x = b.to_vec();
        self.forward_in_place(&mut x);
        self.backward_in_place(&mut x);
        Ok(x)
    }

    pub fn solve_mat(&self, b: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
        if b.rows != self.n {
            return Err(Error::DimensionMismatch {
                context: "cholesky solve",
                expected: self.n,
                got: b.rows,
            });
        }
        let mut out = ComplexMatrix::zeros(b.rows, b.cols);
        for j in 0..b.cols {
            let col = self.solve_vec(&b.column(j))?;
            for (i, v) in col.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        Ok(out)
    }

    /// Explicit inverse `A^{-1}` (Hermitian).
    pub fn inverse(&self) -> ComplexMatrix<T> {
        let n = self.n;
        // wt[j*n + k] = (L^{-1})_{kj}: column j of W = L^{-1}, stored contiguously
        let mut wt = vec![C::<T>::zero(); n * n];
        for j in 0..n {
            let col = &mut wt[j * n..(j + 1) * n];
            col[j] = C::new(T::one() / self.l[j * n + j].re, T::zero());
            for i in j + 1..n {
                let row = &self.l[i * n + j..i * n + i];
                let s: C<T> = row.iter().zip(&col[j..i]).map(|(a, b)| a * b).sum();
                col[i] = -s / self.l[i * n + i].re;
            }
        }
        // A^{-1} = W^H W
        let mut inv = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            let wi = &wt[i * n..(i + 1) * n];
            for j in 0..=i {
                let wj = &wt[j * n..(j + 1) * n];
                let s: C<T> = wi[i..].iter().zip(&wj[i..]).map(|(a, b)| a.conj() * b).sum();
                inv[(i, j)] = s;
                inv[(j, i)] = s.conj();
            }
        }
        inv
    }

    /// `log det A`
    pub fn log_det(&self) -> T {
        let two = T::of(2.0);
        (0..self.n).map(|i| two * self.at(i, i).re.ln()).sum()
    }
}

/// Solves `a X = b` for Hermitian positive definite `a`.
pub fn hermitian_solve<T: Real>(
    a: &ComplexMatrix<T>,
    b: &ComplexMatrix<T>,
) -> Result<ComplexMatrix<T>> {
    Cholesky::factor(a)?.solve_mat(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng::SimRng;
    use crate::numerics::sample_circular_gaussian;

    fn random_matrix(rng: &mut SimRng, rows: usize, cols: usize) -> ComplexMatrix<f64> {
        let v = sample_circular_gaussian::<f64>(rng, rows * cols, 1.0);
        ComplexMatrix::from_row_major(rows, cols, v.into_inner()).unwrap()
    }

    fn spd(rng: &mut SimRng, n: usize) -> ComplexMatrix<f64> {
        let a = random_matrix(rng, n, n);
        a.adjoint().matmul(&a).unwrap().add(&ComplexMatrix::identity(n)).unwrap()
    }

    #[test]
    fn submatrix_rows_of_identity() {
        let m = ComplexMatrix::<f64>::identity(3);
        let s = m.submatrix_rows(&[0, 2]).unwrap();
        assert_eq!(s.rows(), 2);
        assert_eq!(s.row(0), m.row(0));
        assert_eq!(s.row(1), m.row(2));
        assert_eq!(m.submatrix_rows(&[0, 1, 2]).unwrap(), m);
        assert!(matches!(
            m.submatrix_rows(&[3]),
            Err(Error::IndexOutOfRange { index: 3, len: 3 })
        ));
    }

    #[test]
    fn solve_identity_and_scaled_identity() {
        let mut rng = SimRng::new(1);
        let b = random_matrix(&mut rng, 4, 3);
        let x = hermitian_solve(&ComplexMatrix::identity(4), &b).unwrap();
        assert!(x.max_abs_diff(&b) < 1e-15);

        let two = ComplexMatrix::<f64>::identity(4).scale(2.0);
        let x = hermitian_solve(&two, &ComplexMatrix::identity(4)).unwrap();
        assert!(x.max_abs_diff(&ComplexMatrix::identity(4).scale(0.5)) < 1e-15);
    }

    #[test]
    fn multiply_back_residual_on_random_systems() {
        let mut rng = SimRng::new(7);
        for trial in 0..100 {
            let n = 2 + trial % 15;
            let a = spd(&mut rng, n);
            let b = random_matrix(&mut rng, n, 3);
            let x = hermitian_solve(&a, &b).unwrap();
            let back = a.matmul(&x).unwrap();
            let rel = back.max_abs_diff(&b) / b.as_slice().iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(rel < 1e-10, "trial {trial}: residual {rel}");
        }
    }

    #[test]
    fn inverse_and_log_det() {
        let mut rng = SimRng::new(3);
        let a = spd(&mut rng, 8);
        let chol = Cholesky::factor(&a).unwrap();
        let inv = chol.inverse();
        let prod = a.matmul(&inv).unwrap();
        assert!(prod.max_abs_diff(&ComplexMatrix::identity(8)) < 1e-10);

        let d = ComplexMatrix::diagonal(&[C::new(2.0, 0.0), C::new(3.0, 0.0)]);
        let ld = Cholesky::factor(&d).unwrap().log_det();
        assert!((ld - 6f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn rejects_indefinite() {
        let mut a = ComplexMatrix::<f64>::identity(3);
        a[(2, 2)] = C::new(-1.0, 0.0);
        assert!(matches!(Cholesky::factor(&a), Err(Error::Singular { row: 2, .. })));
        let z = ComplexMatrix::<f64>::zeros(2, 2);
        assert!(Cholesky::factor(&z).is_err());
    }

    #[test]
    fn vector_rejects_non_finite() {
        assert!(ComplexVector::new(vec![C::new(f64::NAN, 0.0)]).is_err());
        assert!(ComplexVector::<f64>::new(vec![]).is_err());
    }
}
