//! Sequential SBL: greedy add / re-estimate / delete of single basis columns
//! driven by the closed-form maximizer of the marginal likelihood in each
//! precision `α_i = 1/γ_i` (fast marginal likelihood maximization).
//!
//! For complex data, with `s_i` and `q_i` the sparsity and quality factors of
//! column `i` computed with that column left out of the model, the evidence
//! as a function of `α_i` alone is `ln α - ln(α + s) + |q|²/(α + s)` plus a
//! constant. It peaks at `α = s²/θ` when `θ = |q|² - s > 0` and is maximized
//! by `α = ∞` (column excluded) otherwise.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::numerics::{norm_sqr, Cholesky, ComplexMatrix};
use crate::sbl::operator::SensingOperator;
use crate::sbl::{check_finite, SblSettings};
use crate::scalar::{Real, C};

#[derive(Debug, Clone)]
pub struct SequentialEstimate<T> {
    pub e_hat: Vec<C<T>>,
    /// Columns in the model, ascending.
    pub support: Vec<usize>,
    /// Precisions aligned with `support`.
    pub alpha: Vec<T>,
    pub sigma2: T,
    pub steps: usize,
    pub converged: bool,
    /// Log evidence before each step.
    pub log_likelihood: Vec<T>,
}

impl<T: Real> SequentialEstimate<T> {
    /// Support entries with `1/α_i ≥ rel * max_j 1/α_j`.
    pub fn support_above(&self, rel: T) -> Vec<usize> {
        let max = self.alpha.iter().map(|a| a.recip()).fold(T::zero(), T::max);
        self.support
            .iter()
            .zip(&self.alpha)
            .filter(|(_, a)| a.recip() >= rel * max)
            .map(|(&i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
enum Action<T> {
    Add(usize, T),
    Reestimate(usize, T),
    Delete(usize),
}

/// `ln α - ln(α + s) + |q|²/(α + s)`
fn ell<T: Real>(alpha: T, s: T, q2: T) -> T {
    alpha.ln() - (alpha + s).ln() + q2 / (alpha + s)
}

/// Posterior over the current model columns.
struct Fit<T> {
    /// `Φ^H φ_a` for each model column `a`.
    cross: Vec<Vec<C<T>>>,
    sigma: ComplexMatrix<T>,
    mu: Vec<C<T>>,
    log_likelihood: T,
}

fn fit<T: Real, O: SensingOperator<T> + ?Sized>(
    phi: &O,
    z: &[C<T>],
    h: &[C<T>],
    active: &[usize],
    alpha: &[T],
    sigma2: T,
) -> Result<Fit<T>> {
    let m = phi.rows();
    let beta = sigma2.recip();
    let z2 = norm_sqr(z);
    let const_part = T::of_usize(m) * (T::PI().ln() + sigma2.ln());
    if active.is_empty() {
        return Ok(Fit {
            cross: Vec::new(),
            sigma: ComplexMatrix::zeros(0, 0),
            mu: Vec::new(),
            log_likelihood: -(const_part + beta * z2),
        });
    }
    let k = active.len();
    let cross: Vec<Vec<C<T>>> = active.iter().map(|&a| phi.gram_column(a)).collect();
    // Σ⁻¹ = diag(α) + β Φ_A^H Φ_A
    let prec = ComplexMatrix::from_fn(k, k, |r, c| {
        let g = cross[c][active[r]] * beta;
        if r == c {
            g + C::new(alpha[r], T::zero())
        } else {
            g
        }
    });
    let chol = Cholesky::factor(&prec)?;
    let sigma = chol.inverse();
    let h_a: Vec<C<T>> = active.iter().map(|&a| h[a]).collect();
    let mu: Vec<C<T>> = sigma.matvec(&h_a)?.into_iter().map(|v| v * beta).collect();
    // ln|C| = M ln σ² - Σ ln α + ln|Σ⁻¹|,  z^H C⁻¹ z = β‖z‖² - β h_A^H μ
    let log_det = T::of_usize(m) * sigma2.ln() - alpha.iter().map(|a| a.ln()).sum::<T>() + chol.log_det();
    let quad = beta * z2
        - beta
            * h_a
                .iter()
                .zip(&mu)
                .map(|(hv, mv)| (hv.conj() * mv).re)
                .sum::<T>();
    Ok(Fit {
        cross,
        sigma,
        mu,
        log_likelihood: -(T::of_usize(m) * T::PI().ln() + log_det + quad),
    })
}

/// Sequential estimator of `e` from `z = Φ e + g`.
pub fn estimate_sequential<T: Real, O: SensingOperator<T> + ?Sized>(
    z: &[C<T>],
    phi: &O,
    settings: &SblSettings,
) -> Result<SequentialEstimate<T>> {
    settings.validate()?;
    let (m, n) = (phi.rows(), phi.cols());
    if z.len() != m {
        return Err(Error::DimensionMismatch {
            context: "observation",
            expected: m,
            got: z.len(),
        });
    }
    check_finite(z, "observation")?;
    let learned = settings.sigma2.is_learned();
    let mut sigma2 = T::of(settings.sigma2.initial());
    let tol = T::of(settings.seq_log_alpha_tol);
    let h = phi.apply_adjoint(z);
    let gdiag: Vec<T> = phi.diag_quadratic(&ComplexMatrix::identity(m));

    let empty = |sigma2: T, converged| SequentialEstimate {
        e_hat: vec![C::zero(); n],
        support: Vec::new(),
        alpha: Vec::new(),
        sigma2,
        steps: 0,
        converged,
        log_likelihood: Vec::new(),
    };

    // start from the column with the largest normalized projection
    let (i0, proj) = (0..n)
        .map(|i| (i, h[i].norm_sqr() / gdiag[i]))
        .fold((0, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
    if !(proj > sigma2) {
        return Ok(empty(sigma2, true));
    }
    let mut active = vec![i0];
    let mut alpha = vec![gdiag[i0] / (proj - sigma2)];
    let mut log_likelihood = Vec::new();
    let mut converged = false;
    let mut steps = 0;

    while steps < settings.seq_max_steps {
        let f = fit(phi, z, &h, &active, &alpha, sigma2)?;
        log_likelihood.push(f.log_likelihood);
        let beta = sigma2.recip();
        let k = active.len();

        let mut best: Option<(Action<T>, T)> = None;
        let mut settled = true;
        let mut consider = |act: Action<T>, gain: T| {
            if best.map_or(true, |(_, g)| gain > g) {
                best = Some((act, gain));
            }
        };
        let mut slot = vec![usize::MAX; n];
        for (pos, &a) in active.iter().enumerate() {
            slot[a] = pos;
        }
        for i in 0..n {
            let (s, q2) = if slot[i] != usize::MAX {
                let p = slot[i];
                let sii = f.sigma[(p, p)].re;
                (sii.recip() - alpha[p], (f.mu[p] / sii).norm_sqr())
            } else {
                // S_i = β G_ii - β² b^H Σ b,  Q_i = β h_i - β b^H μ,  b_k = φ_{a_k}^H φ_i
                let b: Vec<C<T>> = (0..k).map(|c| f.cross[c][i].conj()).collect();
                let mut quad = T::zero();
                let mut proj = C::zero();
                for r in 0..k {
                    let mut row = C::zero();
                    for c in 0..k {
                        row += f.sigma[(r, c)] * b[c];
                    }
                    quad += (b[r].conj() * row).re;
                    proj += b[r].conj() * f.mu[r];
                }
                let s = beta * gdiag[i] - beta * beta * quad;
                let q = (h[i] - proj) * beta;
                (s, q.norm_sqr())
            };
            let theta = q2 - s;
            if slot[i] != usize::MAX {
                let p = slot[i];
                let old = ell(alpha[p], s, q2);
                if theta > T::zero() {
                    let new_alpha = s * s / theta;
                    if (new_alpha.ln() - alpha[p].ln()).abs() >= tol {
                        settled = false;
                    }
                    consider(Action::Reestimate(p, new_alpha), ell(new_alpha, s, q2) - old);
                } else {
                    settled = false;
                    consider(Action::Delete(p), -old);
                }
            } else if theta > T::zero() && s > T::zero() {
                settled = false;
                consider(Action::Add(i, s * s / theta), theta / s + (s / q2).ln());
            }
        }
        if settled {
            converged = true;
            break;
        }
        let Some((action, _)) = best else {
            converged = true;
            break;
        };
        match action {
            Action::Add(i, a) => {
                let pos = active.partition_point(|&x| x < i);
                active.insert(pos, i);
                alpha.insert(pos, a);
            }
            Action::Reestimate(p, a) => alpha[p] = a,
            Action::Delete(p) => {
                active.remove(p);
                alpha.remove(p);
            }
        }
        steps += 1;
        if active.is_empty() {
            let mut out = empty(sigma2, true);
            out.steps = steps;
            out.log_likelihood = log_likelihood;
            return Ok(out);
        }
        if learned {
            let f = fit(phi, z, &h, &active, &alpha, sigma2)?;
            let mut w = vec![C::zero(); n];
            for (p, &a) in active.iter().enumerate() {
                w[a] = f.mu[p];
            }
            let resid: T = z.iter().zip(phi.apply(&w)).map(|(a, b)| (a - b).norm_sqr()).sum();
            let used: T = (0..active.len())
                .map(|p| T::one() - alpha[p] * f.sigma[(p, p)].re)
                .sum();
            let dof = T::of_usize(m) - used;
            if dof > T::zero() && resid > T::zero() {
                sigma2 = resid / dof;
            }
        }
    }

    let f = fit(phi, z, &h, &active, &alpha, sigma2)?;
    let mut e_hat = vec![C::zero(); n];
    for (p, &a) in active.iter().enumerate() {
        e_hat[a] = f.mu[p];
    }
    Ok(SequentialEstimate {
        e_hat,
        support: active,
        alpha,
        sigma2,
        steps,
        converged,
        log_likelihood,
    })
}
