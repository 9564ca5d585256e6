//! All-tone estimator: the data-tone content `(Λx)_Ī` is treated as a
//! continuous hyperparameter and learned jointly with `(γ, σ²)` from `y`.
//!
//! With `y = Λx + F e + g` and unitary `F`, the posterior of `e` given the
//! current hyperparameters is diagonal: `Σ_e = diag(γσ²/(γ+σ²))` and
//! `μ_e = γ/(γ+σ²) ⊙ F^H (y - Λx)`. The default route uses this and costs one
//! FFT per iteration; [`estimate_alltone_dense`] evaluates the same update
//! with explicit `N x N` matrices.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::numerics::{norm_sqr, ComplexMatrix, Dft};
use crate::ofdm::{qpsk_demap, qpsk_map, Ofdm};
use crate::sbl::posterior::sbl_posterior;
use crate::sbl::{check_finite, estimate_nulltone, prune, relative_change, AllToneInit, PartialDft, SblSettings, SblState};
use crate::scalar::{Real, C};

/// Partition of the tones into observed non-data tones with known
/// `(Λx)_I` and data tones whose `(Λx)_Ī` is learned.
#[derive(Debug, Clone, Copy)]
pub struct ToneSplit<'a, T> {
    pub nondata: &'a [usize],
    pub data: &'a [usize],
    /// `(Λx)_I`, aligned with `nondata`.
    pub known: &'a [C<T>],
    /// Starting `(Λx)_Ī`, aligned with `data`; `y_Ī` when absent.
    pub initial: Option<&'a [C<T>]>,
}

impl<T: Real> ToneSplit<'_, T> {
    fn validate(&self, n: usize) -> Result<()> {
        if self.known.len() != self.nondata.len() {
            return Err(Error::DimensionMismatch {
                context: "known non-data values",
                expected: self.nondata.len(),
                got: self.known.len(),
            });
        }
        if let Some(init) = self.initial {
            if init.len() != self.data.len() {
                return Err(Error::DimensionMismatch {
                    context: "initial data-tone values",
                    expected: self.data.len(),
                    got: init.len(),
                });
            }
        }
        if self.nondata.is_empty() {
            return Err(Error::InvalidParameter("no non-data tones to observe".into()));
        }
        let mut seen = vec![false; n];
        for &k in self.nondata.iter().chain(self.data) {
            if k >= n {
                return Err(Error::IndexOutOfRange { index: k, len: n });
            }
            if std::mem::replace(&mut seen[k], true) {
                return Err(Error::InvalidParameter(format!("tone {k} listed twice")));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidParameter("tone split does not cover every tone".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct AllToneEstimate<T> {
    pub e_hat: Vec<C<T>>,
    /// Learned `(Λx)_Ī`, aligned with the data tones.
    pub lambda_x: Vec<C<T>>,
    pub state: SblState<T>,
}

struct Moments<T> {
    mu: Vec<C<T>>,
    sigma_diag: Vec<T>,
    log_likelihood: T,
}

trait Route<T: Real> {
    fn len(&self) -> usize;
    /// Posterior of `e` given the residual spectrum `d = y - Λx`.
    fn moments(&self, d: &[C<T>], gamma: &[T], sigma2: T) -> Result<Moments<T>>;
    /// `F μ`
    fn forward(&self, mu: &[C<T>]) -> Vec<C<T>>;
}

struct Diagonal<'a, T: Real>(&'a Dft<T>);

impl<T: Real> Route<T> for Diagonal<'_, T> {
    fn len(&self) -> usize {
        self.0.len()
    }

    fn moments(&self, d: &[C<T>], gamma: &[T], sigma2: T) -> Result<Moments<T>> {
        let r = self.0.inverse(d);
        let n = r.len();
        let mut mu = Vec::with_capacity(n);
        let mut sigma_diag = Vec::with_capacity(n);
        let mut ll = -T::of_usize(n) * T::PI().ln();
        for (ri, &g) in r.iter().zip(gamma) {
            let v = g + sigma2;
            mu.push(ri * (g / v));
            sigma_diag.push(g * sigma2 / v);
            ll -= v.ln() + ri.norm_sqr() / v;
        }
        Ok(Moments {
            mu,
            sigma_diag,
            log_likelihood: ll,
        })
    }

    fn forward(&self, mu: &[C<T>]) -> Vec<C<T>> {
        self.0.forward(mu)
    }
}

struct Dense<'a, T>(&'a ComplexMatrix<T>);

impl<T: Real> Route<T> for Dense<'_, T> {
    fn len(&self) -> usize {
        self.0.rows()
    }

    fn moments(&self, d: &[C<T>], gamma: &[T], sigma2: T) -> Result<Moments<T>> {
        let f = self.0;
        let post = sbl_posterior(f, d, gamma, sigma2)?;
        // μ_e = σ⁻² Σ_e F^H (y - Λx)
        let back = f.adjoint_matvec(d)?;
        let mu = post
            .sigma
            .matvec(&back)?
            .into_iter()
            .map(|v| v / sigma2)
            .collect();
        let sigma_diag = (0..f.cols()).map(|i| post.sigma[(i, i)].re.max(T::zero())).collect();
        let log_likelihood =
            crate::sbl::posterior::log_marginal_likelihood(f, d, gamma, sigma2)?;
        Ok(Moments {
            mu,
            sigma_diag,
            log_likelihood,
        })
    }

    fn forward(&self, mu: &[C<T>]) -> Vec<C<T>> {
        self.0.matvec(mu).expect("square DFT matrix")
    }
}

/// All-tone estimator on an explicit tone split, FFT route.
pub fn estimate_alltone_tones<T: Real>(
    y: &[C<T>],
    dft: &Dft<T>,
    tones: &ToneSplit<'_, T>,
    settings: &SblSettings,
) -> Result<AllToneEstimate<T>> {
    run(y, &Diagonal(dft), tones, settings)
}

/// All-tone estimator with `N x N` matrix algebra (`O(N³)` per iteration).
pub fn estimate_alltone_dense<T: Real>(
    y: &[C<T>],
    f: &ComplexMatrix<T>,
    tones: &ToneSplit<'_, T>,
    settings: &SblSettings,
) -> Result<AllToneEstimate<T>> {
    if f.rows() != f.cols() {
        return Err(Error::DimensionMismatch {
            context: "square DFT matrix",
            expected: f.rows(),
            got: f.cols(),
        });
    }
    run(y, &Dense(f), tones, settings)
}

/// All-tone estimator for an OFDM symbol: returns `ê`, the equalized
/// continuous data estimate `x̂_Ī` and the final state.
///
/// `(Λx)_Ī` starts at QPSK decisions chosen by `settings.alltone_init` and
/// is never re-quantized afterwards.
pub fn estimate_alltone<T: Real>(
    y: &[C<T>],
    ofdm: &Ofdm<T>,
    pilot_values: &[C<T>],
    settings: &SblSettings,
) -> Result<(Vec<C<T>>, Vec<C<T>>, SblState<T>)> {
    if y.len() != ofdm.n_fft() {
        return Err(Error::DimensionMismatch {
            context: "received spectrum",
            expected: ofdm.n_fft(),
            got: y.len(),
        });
    }
    let known = ofdm.known_nondata(pilot_values)?;
    // y_Ī itself is a poor start; begin at QPSK decisions instead
    let start = match settings.alltone_init {
        AllToneInit::HardDecision => y.to_vec(),
        AllToneInit::Nulltone => {
            let op = PartialDft::with_dft(ofdm.dft().clone(), ofdm.nondata_tones())?;
            let z = ofdm.observe_nondata(y, pilot_values)?;
            let (e_hat, _) = estimate_nulltone(&z, &op, settings)?;
            let fe = ofdm.dft().forward(&e_hat);
            y.iter().zip(&fe).map(|(a, b)| *a - *b).collect()
        }
    };
    let initial: Vec<C<T>> = ofdm
        .data_tones()
        .iter()
        .map(|&k| {
            let h = ofdm.channel()[k];
            qpsk_map::<T>(&qpsk_demap(&[start[k] / h]))[0] * h
        })
        .collect();
    let tones = ToneSplit {
        nondata: ofdm.nondata_tones(),
        data: ofdm.data_tones(),
        known: &known,
        initial: Some(&initial),
    };
    let est = estimate_alltone_tones(y, ofdm.dft(), &tones, settings)?;
    let x_hat = ofdm
        .data_tones()
        .iter()
        .zip(&est.lambda_x)
        .map(|(&k, lx)| lx / ofdm.channel()[k])
        .collect();
    Ok((est.e_hat, x_hat, est.state))
}

fn run<T: Real, R: Route<T>>(
    y: &[C<T>],
    route: &R,
    tones: &ToneSplit<'_, T>,
    settings: &SblSettings,
) -> Result<AllToneEstimate<T>> {
    settings.validate()?;
    let n = route.len();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            context: "received spectrum",
            expected: n,
            got: y.len(),
        });
    }
    tones.validate(n)?;
    check_finite(y, "received spectrum")?;
    let floor = T::of(settings.gamma_floor);
    let tol = T::of(settings.convergence_tol);
    let learned = settings.sigma2.is_learned();
    let mut sigma2 = T::of(settings.sigma2.initial());

    // Λx: known on I, initialized to y on Ī
    let mut lx = y.to_vec();
    for (&k, &v) in tones.nondata.iter().zip(tones.known) {
        lx[k] = v;
    }
    if let Some(init) = tones.initial {
        for (&k, &v) in tones.data.iter().zip(init) {
            lx[k] = v;
        }
    }
    let z_energy: T = tones.nondata.iter().map(|&k| (y[k] - lx[k]).norm_sqr()).sum();
    let mut gamma = vec![z_energy / T::of_usize(tones.nondata.len()); n];
    let residual = |lx: &[C<T>]| -> Vec<C<T>> { y.iter().zip(lx).map(|(a, b)| a - b).collect() };
    let data_part = |lx: &[C<T>]| -> Vec<C<T>> { tones.data.iter().map(|&k| lx[k]).collect() };

    if gamma.iter().all(|g| g.is_zero()) {
        return Ok(AllToneEstimate {
            e_hat: vec![C::zero(); n],
            lambda_x: data_part(&lx),
            state: SblState {
                gamma,
                sigma2,
                mu: vec![C::zero(); n],
                sigma_diag: vec![T::zero(); n],
                iterations: 0,
                converged: true,
                degenerate: true,
                log_likelihood: Vec::new(),
            },
        });
    }

    let mut log_likelihood = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut next = vec![T::zero(); n];
    while iterations < settings.max_iters {
        let d = residual(&lx);
        let mom = route.moments(&d, &gamma, sigma2)?;
        log_likelihood.push(mom.log_likelihood);
        for i in 0..n {
            next[i] = mom.sigma_diag[i] + mom.mu[i].norm_sqr();
        }
        prune(&mut next, floor);
        let fit = route.forward(&mom.mu);
        if learned {
            let resid: T = d.iter().zip(&fit).map(|(a, b)| (a - b).norm_sqr()).sum();
            let mut dof = T::zero();
            for i in 0..n {
                if gamma[i] > T::zero() {
                    dof += T::one() - mom.sigma_diag[i] / gamma[i];
                }
            }
            sigma2 = (resid + sigma2 * dof) / T::of_usize(n);
            if !(sigma2 > T::zero()) || !sigma2.is_finite() {
                return Err(Error::NonFinite("learned σ²"));
            }
        }
        for &k in tones.data {
            lx[k] = y[k] - fit[k];
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
    let mom = route.moments(&residual(&lx), &gamma, sigma2)?;
    let degenerate = gamma.iter().all(|g| g.is_zero());
    debug_assert!(norm_sqr(&mom.mu).is_finite());
    Ok(AllToneEstimate {
        e_hat: mom.mu.clone(),
        lambda_x: data_part(&lx),
        state: SblState {
            gamma,
            sigma2,
            mu: mom.mu,
            sigma_diag: mom.sigma_diag,
            iterations,
            converged,
            degenerate,
            log_likelihood,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{dft_matrix, max_abs_diff, sample_circular_gaussian, SimRng};
    use crate::ofdm::{qpsk_map, OfdmConfig};
    use crate::sbl::{estimate_nulltone, Sigma2Mode};
    use rand::Rng;

    fn symbol(rng: &mut SimRng, ofdm: &Ofdm<f64>) -> Vec<C<f64>> {
        let bits: Vec<u8> = (0..ofdm.bits_per_symbol()).map(|_| rng.gen_range(0..2)).collect();
        let x = ofdm.assemble(&qpsk_map::<f64>(&bits), &[]).unwrap();
        x
    }

    fn impulses(rng: &mut SimRng, n: usize, k: usize, amp: f64) -> Vec<C<f64>> {
        let mut e = vec![C::zero(); n];
        for i in rand::seq::index::sample(rng, n, k) {
            e[i] = C::from_polar(amp, rng.gen::<f64>() * 6.28);
        }
        e
    }

    #[test]
    fn clean_symbol_gives_zero_estimate_and_exact_data() {
        let ofdm = Ofdm::<f64>::new(&OfdmConfig::default()).unwrap();
        let mut rng = SimRng::new(1);
        let x = symbol(&mut rng, &ofdm);
        let (e, xh, st) = estimate_alltone(&x, &ofdm, &[], &SblSettings::default()).unwrap();
        assert!(e.iter().all(|v| v.is_zero()));
        assert!(st.degenerate);
        let tx: Vec<_> = ofdm.data_tones().iter().map(|&k| x[k]).collect();
        assert_eq!(xh, tx);
    }

    #[test]
    fn nulltone_start_removes_strong_impulses() {
        let ofdm = Ofdm::<f64>::new(&OfdmConfig::default()).unwrap();
        let mut rng = SimRng::new(4);
        let x = symbol(&mut rng, &ofdm);
        let e = impulses(&mut rng, 128, 3, 20.0);
        let fe = ofdm.dft().forward(&e);
        let g = sample_circular_gaussian::<f64>(&mut rng, 128, 1e-3);
        let y: Vec<_> = (0..128).map(|k| x[k] + fe[k] + g[k]).collect();
        // impulses this strong wreck raw hard decisions on most data tones
        let s = SblSettings {
            alltone_init: AllToneInit::Nulltone,
            ..SblSettings::with_sigma2(Sigma2Mode::Fixed(1e-3))
        };
        let (e_hat, xh, st) = estimate_alltone(&y, &ofdm, &[], &s).unwrap();
        assert!(max_abs_diff(&e_hat, &e) < 0.5);
        let tx: Vec<_> = ofdm.data_tones().iter().map(|&k| x[k]).collect();
        assert_eq!(qpsk_demap(&xh), qpsk_demap(&tx));
        assert!(st.log_likelihood.windows(2).all(|w| w[1] - w[0] >= -1e-9));
    }

    #[test]
    fn dense_route_matches_fft_route() {
        let ofdm = Ofdm::<f64>::new(&OfdmConfig::default()).unwrap();
        let mut rng = SimRng::new(2);
        let x = symbol(&mut rng, &ofdm);
        let e = impulses(&mut rng, 128, 4, 3.0);
        let fe = ofdm.dft().forward(&e);
        let g = sample_circular_gaussian::<f64>(&mut rng, 128, 0.01);
        let y: Vec<_> = (0..128).map(|k| x[k] + fe[k] + g[k]).collect();
        let known = ofdm.known_nondata(&[]).unwrap();
        let tones = ToneSplit {
            nondata: ofdm.nondata_tones(),
            data: ofdm.data_tones(),
            known: &known,
            initial: None,
        };
        let s = SblSettings {
            max_iters: 25,
            ..SblSettings::with_sigma2(Sigma2Mode::Fixed(0.01))
        };
        let fast = estimate_alltone_tones(&y, ofdm.dft(), &tones, &s).unwrap();
        let dense = estimate_alltone_dense(&y, &dft_matrix(128), &tones, &s).unwrap();
        assert_eq!(fast.state.iterations, dense.state.iterations);
        assert!(max_abs_diff(&fast.e_hat, &dense.e_hat) < 1e-9);
        for (a, b) in fast.state.log_likelihood.iter().zip(&dense.state.log_likelihood) {
            assert!((a - b).abs() < 1e-8 * a.abs().max(1.0));
        }
    }

    #[test]
    fn no_data_tones_reduces_to_nulltone() {
        let n = 32;
        let dft = Dft::<f64>::new(n);
        let all: Vec<usize> = (0..n).collect();
        let mut rng = SimRng::new(3);
        let e = impulses(&mut rng, n, 3, 4.0);
        let g = sample_circular_gaussian::<f64>(&mut rng, n, 0.1);
        let y: Vec<_> = dft.forward(&e).iter().zip(g.iter()).map(|(a, b)| a + b).collect();
        let s = SblSettings::with_sigma2(Sigma2Mode::Fixed(0.1));
        let known = vec![C::zero(); n];
        let tones = ToneSplit { nondata: &all, data: &[], known: &known, initial: None };
        let at = estimate_alltone_tones(&y, &dft, &tones, &s).unwrap();
        let (nt, st) = estimate_nulltone(&y, &dft_matrix::<f64>(n), &s).unwrap();
        assert_eq!(at.state.iterations, st.iterations);
        assert!(max_abs_diff(&at.e_hat, &nt) < 1e-10);
        for (a, b) in at.state.gamma.iter().zip(&st.gamma) {
            assert!((a - b).abs() < 1e-10 * (1.0 + b));
        }
    }

    #[test]
    fn bad_tone_split_rejected() {
        let dft = Dft::<f64>::new(4);
        let s = SblSettings::default();
        let y = vec![C::zero(); 4];
        let k = vec![C::zero(); 2];
        let overlap = ToneSplit { nondata: &[0, 1], data: &[1, 2, 3], known: &k, initial: None };
        assert!(estimate_alltone_tones(&y, &dft, &overlap, &s).is_err());
        let gap = ToneSplit { nondata: &[0, 1], data: &[2], known: &k, initial: None };
        assert!(estimate_alltone_tones(&y, &dft, &gap, &s).is_err());
        let short = ToneSplit { nondata: &[0, 1], data: &[2, 3], known: &k[..1], initial: None };
        assert!(estimate_alltone_tones(&y, &dft, &short, &s).is_err());
    }
}
