//! EM iterations for the non-data-tone estimator `z = F_I e + g_I`.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::numerics::norm_sqr;
use crate::sbl::operator::SensingOperator;
use crate::sbl::posterior::posterior_moments;
use crate::sbl::{check_finite, prune, relative_change, GammaHyperprior, SblSettings, SblState};
use crate::scalar::{Real, C};

/// Null/pilot-tone estimator: returns `ê = μ_e` and the final state.
pub fn estimate_nulltone<T: Real, O: SensingOperator<T> + ?Sized>(
    z: &[C<T>],
    phi: &O,
    settings: &SblSettings,
) -> Result<(Vec<C<T>>, SblState<T>)> {
    let state = run_em(z, phi, settings, None)?;
    Ok((state.mu.clone(), state))
}

/// As [`estimate_nulltone`] with the hyperprior-modified γ update.
pub fn estimate_nulltone_with_prior<T: Real, O: SensingOperator<T> + ?Sized>(
    z: &[C<T>],
    phi: &O,
    settings: &SblSettings,
    prior: &GammaHyperprior<T>,
) -> Result<(Vec<C<T>>, SblState<T>)> {
    prior.validate()?;
    if prior.len() != phi.cols() {
        return Err(Error::DimensionMismatch {
            context: "hyperprior",
            expected: phi.cols(),
            got: prior.len(),
        });
    }
    let state = run_em(z, phi, settings, Some(prior))?;
    Ok((state.mu.clone(), state))
}

fn run_em<T: Real, O: SensingOperator<T> + ?Sized>(
    z: &[C<T>],
    phi: &O,
    settings: &SblSettings,
    prior: Option<&GammaHyperprior<T>>,
) -> Result<SblState<T>> {
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
    let floor = T::of(settings.gamma_floor);
    let tol = T::of(settings.convergence_tol);
    let learned = settings.sigma2.is_learned();
    let mut sigma2 = T::of(settings.sigma2.initial());

    let energy = norm_sqr(z);
    let mut gamma = vec![energy / T::of_usize(m); n];
    if let (true, Some(p)) = (energy.is_zero(), prior) {
        // the side estimate alone can keep the prior away from zero
        gamma = (0..n).map(|i| p.gamma_update(i, T::zero())).collect();
    }
    if gamma.iter().all(|g| g.is_zero()) {
        return Ok(SblState {
            gamma,
            sigma2,
            mu: vec![C::zero(); n],
            sigma_diag: vec![T::zero(); n],
            iterations: 0,
            converged: true,
            degenerate: true,
            log_likelihood: Vec::new(),
        });
    }

    let mut log_likelihood = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut next = vec![T::zero(); n];
    while iterations < settings.max_iters {
        let mom = posterior_moments(phi, z, &gamma, sigma2)?;
        log_likelihood.push(mom.log_likelihood);
        for i in 0..n {
            let second = mom.sigma_diag[i] + mom.mu[i].norm_sqr();
            next[i] = match prior {
                Some(p) => p.gamma_update(i, second),
                None => second,
            };
        }
        prune(&mut next, floor);
        if learned {
            let fit = phi.apply(&mom.mu);
            let resid: T = z.iter().zip(&fit).map(|(a, b)| (a - b).norm_sqr()).sum();
            let mut dof = T::zero();
            for i in 0..n {
                if gamma[i] > T::zero() {
                    dof += T::one() - mom.sigma_diag[i] / gamma[i];
                }
            }
            sigma2 = (resid + sigma2 * dof) / T::of_usize(m);
            if !(sigma2 > T::zero()) || !sigma2.is_finite() {
                return Err(Error::NonFinite("learned σ²"));
            }
        }
        let change = relative_change(&gamma, &next);
        std::mem::swap(&mut gamma, &mut next);
        iterations += 1;
        if !change.is_finite() {
            return Err(Error::NonFinite("γ update"));
        }
        if change < tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::debug!("SBL EM stopped at {} iterations without converging", iterations);
    }
    let mom = posterior_moments(phi, z, &gamma, sigma2)?;
    Ok(SblState {
        gamma,
        sigma2,
        mu: mom.mu,
        sigma_diag: mom.sigma_diag,
        iterations,
        converged,
        degenerate: mom.degenerate,
        log_likelihood,
    })
}
