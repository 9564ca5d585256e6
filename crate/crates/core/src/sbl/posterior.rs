//! Gaussian posterior of the SBL weights given `(γ, σ²)`.
//!
//! Two algebraic routes are provided. The precision form inverts
//! `σ⁻² Φ^H Φ + Γ⁻¹` over the active coordinates; the covariance (Woodbury)
//! form `Σ = Γ - Γ Φ^H (σ² I + Φ Γ Φ^H)⁻¹ Φ Γ` never touches `Γ⁻¹` and so
//! handles pruned coordinates directly.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::numerics::{Cholesky, ComplexMatrix};
use crate::sbl::operator::SensingOperator;
use crate::scalar::{Real, C};

/// Posterior `CN(μ, Σ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior<T> {
    pub mu: Vec<C<T>>,
    pub sigma: ComplexMatrix<T>,
    /// Every coordinate was pruned; the estimate is identically zero.
    pub degenerate: bool,
}

fn check_dims<T: Real>(phi: &ComplexMatrix<T>, t: &[C<T>], gamma: &[T], sigma2: T) -> Result<()> {
    if t.len() != phi.rows() {
        return Err(Error::DimensionMismatch {
            context: "observation",
            expected: phi.rows(),
            got: t.len(),
        });
    }
    if gamma.len() != phi.cols() {
        return Err(Error::DimensionMismatch {
            context: "gamma",
            expected: phi.cols(),
            got: gamma.len(),
        });
    }
    if !(sigma2 > T::zero()) {
        return Err(Error::InvalidParameter("σ² must be > 0".into()));
    }
    if gamma.iter().any(|&g| !(g >= T::zero())) {
        return Err(Error::InvalidParameter("γ must be non-negative".into()));
    }
    Ok(())
}

/// Posterior via the covariance (Woodbury) form; zero `γ_i` are exactly
/// pruned (`μ_i = 0`, row and column `i` of `Σ` zero).
pub fn sbl_posterior<T: Real>(
    phi: &ComplexMatrix<T>,
    t: &[C<T>],
    gamma: &[T],
    sigma2: T,
) -> Result<Posterior<T>> {
    check_dims(phi, t, gamma, sigma2)?;
    let (m, n) = (phi.rows(), phi.cols());
    let degenerate = gamma.iter().all(|g| g.is_zero());
    let mut c = SensingOperator::weighted_gram(phi, gamma);
    for j in 0..m {
        c[(j, j)] += C::new(sigma2, T::zero());
    }
    let chol = Cholesky::factor(&c)?;
    let phi_gamma = ComplexMatrix::from_fn(m, n, |j, i| phi[(j, i)] * gamma[i]);
    let w = chol.solve_mat(&phi_gamma)?;
    let mut sigma = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for k in 0..n {
            let mut s = C::zero();
            for j in 0..m {
                s += phi_gamma[(j, i)].conj() * w[(j, k)];
            }
            sigma[(i, k)] = -s;
        }
        sigma[(i, i)] += C::new(gamma[i], T::zero());
    }
    let u = chol.solve_vec(t)?;
    let mu = phi_gamma.adjoint_matvec(&u)?;
    Ok(Posterior {
        mu,
        sigma,
        degenerate,
    })
}

/// Posterior via the precision form `Σ = (σ⁻² Φ^H Φ + Γ⁻¹)⁻¹`,
/// `μ = σ⁻² Σ Φ^H t`, restricted to the coordinates with `γ_i > 0`.
pub fn sbl_posterior_direct<T: Real>(
    phi: &ComplexMatrix<T>,
    t: &[C<T>],
    gamma: &[T],
    sigma2: T,
) -> Result<Posterior<T>> {
    check_dims(phi, t, gamma, sigma2)?;
    let n = phi.cols();
    let active: Vec<usize> = (0..n).filter(|&i| gamma[i] > T::zero()).collect();
    let mut mu = vec![C::zero(); n];
    let mut sigma = ComplexMatrix::zeros(n, n);
    if active.is_empty() {
        return Ok(Posterior {
            mu,
            sigma,
            degenerate: true,
        });
    }
    let beta = T::one() / sigma2;
    let pa = phi.submatrix_cols(&active)?;
    let mut prec = pa.adjoint().matmul(&pa)?.scale(beta);
    for (a, &i) in active.iter().enumerate() {
        prec[(a, a)] += C::new(T::one() / gamma[i], T::zero());
    }
    let cov = Cholesky::factor(&prec)?.inverse();
    let pt = pa.adjoint_matvec(t)?;
    let mu_a = cov.matvec(&pt)?;
    for (a, &i) in active.iter().enumerate() {
        mu[i] = mu_a[a] * beta;
        for (b, &k) in active.iter().enumerate() {
            sigma[(i, k)] = cov[(a, b)];
        }
    }
    Ok(Posterior {
        mu,
        sigma,
        degenerate: false,
    })
}

/// First two posterior moments plus the log evidence, as needed by the EM
/// loop: `μ`, `diag Σ` and `log CN(t; 0, σ² I + Φ Γ Φ^H)`.
#[derive(Debug, Clone)]
pub struct Moments<T> {
    pub mu: Vec<C<T>>,
    pub sigma_diag: Vec<T>,
    pub log_likelihood: T,
    pub degenerate: bool,
}

pub fn posterior_moments<T: Real, O: SensingOperator<T> + ?Sized>(
    op: &O,
    t: &[C<T>],
    gamma: &[T],
    sigma2: T,
) -> Result<Moments<T>> {
    let m = op.rows();
    let terms = op.covariance_terms(t, gamma, sigma2)?;
    let log_likelihood = -(T::of_usize(m) * T::PI().ln() + terms.log_det + terms.quad);
    let back = op.apply_adjoint(&terms.solved);
    let mu: Vec<C<T>> = back.iter().zip(gamma).map(|(b, &g)| b * g).collect();
    let q = terms.q;
    let sigma_diag = gamma
        .iter()
        .zip(&q)
        .map(|(&g, &qi)| (g - g * g * qi).max(T::zero()))
        .collect();
    Ok(Moments {
        mu,
        sigma_diag,
        log_likelihood,
        degenerate: gamma.iter().all(|g| g.is_zero()),
    })
}

/// `log CN(t; 0, σ² I + Φ Γ Φ^H)`
pub fn log_marginal_likelihood<T: Real, O: SensingOperator<T> + ?Sized>(
    op: &O,
    t: &[C<T>],
    gamma: &[T],
    sigma2: T,
) -> Result<T> {
    let terms = op.covariance_terms(t, gamma, sigma2)?;
    Ok(-(T::of_usize(op.rows()) * T::PI().ln() + terms.log_det + terms.quad))
}
