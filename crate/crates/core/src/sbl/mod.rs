//! Sparse Bayesian learning estimators of the time-domain impulsive noise.
//!
//! All estimators model `e ~ CN(0, Γ)` with a learned diagonal `Γ = diag(γ)`
//! and observe it through a linear operator plus white noise of variance σ².

mod alltone;
mod em;
mod feedback;
pub mod operator;
pub mod posterior;
mod sequential;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Real, C};

pub use alltone::{estimate_alltone, estimate_alltone_dense, estimate_alltone_tones, AllToneEstimate, ToneSplit};
pub use em::{estimate_nulltone, estimate_nulltone_with_prior};
pub use feedback::{detect_and_decode, estimate_decision_feedback, FeedbackEstimate, FeedbackSettings, PacketLayout};
pub use operator::{cholesky_terms, CovarianceTerms, PartialDft, SensingOperator};
pub use posterior::{posterior_moments, sbl_posterior, sbl_posterior_direct, Posterior};
pub use sequential::{estimate_sequential, SequentialEstimate};

/// How the background noise variance σ² is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode", content = "value")]
pub enum Sigma2Mode {
    /// Held at the given value.
    Fixed(f64),
    /// Re-estimated every iteration starting from the given value.
    Learned(f64),
}

impl Sigma2Mode {
    pub fn initial(&self) -> f64 {
        match *self {
            Sigma2Mode::Fixed(v) | Sigma2Mode::Learned(v) => v,
        }
    }

    pub fn is_learned(&self) -> bool {
        matches!(self, Sigma2Mode::Learned(_))
    }

    /// Same mode with a new value.
    pub fn with_value(&self, v: f64) -> Self {
        match self {
            Sigma2Mode::Fixed(_) => Sigma2Mode::Fixed(v),
            Sigma2Mode::Learned(_) => Sigma2Mode::Learned(v),
        }
    }
}

/// Where the all-tone EM starts `(Λx)_Ī` on a real OFDM symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllToneInit {
    /// QPSK decisions on the raw data tones.
    #[default]
    HardDecision,
    /// QPSK decisions after subtracting the null-tone estimate.
    Nulltone,
}

/// Stopping and pruning rules shared by the estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SblSettings {
    pub max_iters: usize,
    /// EM stops once `max_i |Δγ_i| / max_i γ_i` falls below this.
    pub convergence_tol: f64,
    /// `γ_i < gamma_floor * max_j γ_j` is set to exactly zero.
    pub gamma_floor: f64,
    pub sigma2: Sigma2Mode,
    /// Add/delete/re-estimate budget of the sequential backend.
    pub seq_max_steps: usize,
    /// Sequential backend stops once every re-estimate moves `ln α` less than this.
    pub seq_log_alpha_tol: f64,
    pub alltone_init: AllToneInit,
}

impl Default for SblSettings {
    fn default() -> Self {
        Self {
            max_iters: 200,
            convergence_tol: 1e-4,
            gamma_floor: 1e-8,
            sigma2: Sigma2Mode::Fixed(1.0),
            seq_max_steps: 1000,
            seq_log_alpha_tol: 1e-6,
            alltone_init: AllToneInit::HardDecision,
        }
    }
}

impl SblSettings {
    pub fn with_sigma2(sigma2: Sigma2Mode) -> Self {
        Self {
            sigma2,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || self.seq_max_steps == 0 {
            return Err(Error::InvalidParameter("iteration budgets must be positive".into()));
        }
        if !(self.convergence_tol > 0.0) || !(self.seq_log_alpha_tol > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be > 0".into()));
        }
        if !(self.gamma_floor >= 0.0 && self.gamma_floor < 1.0) {
            return Err(Error::InvalidParameter("gamma_floor must lie in [0, 1)".into()));
        }
        let s = self.sigma2.initial();
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidParameter(format!("σ² must be finite and > 0, got {s}")));
        }
        Ok(())
    }
}

/// Gamma hyperprior on the precisions `p_i = 1/γ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaHyperprior<T> {
    pub a: Vec<T>,
    pub b: Vec<T>,
}

impl<T: Real> GammaHyperprior<T> {
    /// `a = b = 0`: the flat prior implicit in plain SBL.
    pub fn uninformative(n: usize) -> Self {
        Self {
            a: vec![T::zero(); n],
            b: vec![T::zero(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.a.len() != self.b.len() {
            return Err(Error::DimensionMismatch {
                context: "hyperprior b",
                expected: self.a.len(),
                got: self.b.len(),
            });
        }
        if self.a.iter().chain(&self.b).any(|&v| !(v >= T::zero()) || !v.is_finite()) {
            return Err(Error::InvalidParameter("hyperprior a, b must be finite and ≥ 0".into()));
        }
        Ok(())
    }

    /// Conjugate update from a side estimate: `a + 1/2`, `b + |ẽ|²/2`.
    pub fn updated(&self, e_tilde: &[C<T>]) -> Result<Self> {
        if e_tilde.len() != self.len() {
            return Err(Error::DimensionMismatch {
                context: "side estimate",
                expected: self.len(),
                got: e_tilde.len(),
            });
        }
        let half = T::of(0.5);
        Ok(Self {
            a: self.a.iter().map(|&a| a + half).collect(),
            b: self
                .b
                .iter()
                .zip(e_tilde)
                .map(|(&b, e)| b + e.norm_sqr() * half)
                .collect(),
        })
    }

    /// γ update given posterior moments: `(|μ|² + Σ_ii + 2b) / (1 + 2a)`.
    #[inline]
    pub fn gamma_update(&self, i: usize, second_moment: T) -> T {
        let two = T::of(2.0);
        (second_moment + two * self.b[i]) / (T::one() + two * self.a[i])
    }
}

/// Hyperparameters and posterior summary at the end of an SBL run.
///
/// Only the diagonal of the posterior covariance is kept; the full matrix is
/// available from [`sbl_posterior`].
#[derive(Debug, Clone, PartialEq)]
pub struct SblState<T> {
    pub gamma: Vec<T>,
    pub sigma2: T,
    pub mu: Vec<C<T>>,
    pub sigma_diag: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
    /// Every `γ_i` was pruned; `mu` is identically zero.
    pub degenerate: bool,
    /// Log evidence at the start of each iteration.
    pub log_likelihood: Vec<T>,
}

impl<T: Real> SblState<T> {
    /// Indices with `γ_i > 0` after pruning.
    pub fn support(&self) -> Vec<usize> {
        (0..self.gamma.len()).filter(|&i| self.gamma[i] > T::zero()).collect()
    }

    /// Indices with `γ_i ≥ rel * max γ`.
    pub fn support_above(&self, rel: T) -> Vec<usize> {
        let max = self.gamma.iter().copied().fold(T::zero(), T::max);
        if max <= T::zero() {
            return Vec::new();
        }
        (0..self.gamma.len())
            .filter(|&i| self.gamma[i] >= rel * max)
            .collect()
    }
}

pub(crate) fn check_finite<T: Real>(v: &[C<T>], what: &'static str) -> Result<()> {
    if v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// `max_i |new_i - old_i| / max_i new_i`, zero when both are all-zero.
pub(crate) fn relative_change<T: Real>(old: &[T], new: &[T]) -> T {
    let scale = new.iter().copied().fold(T::zero(), T::max);
    let diff = old
        .iter()
        .zip(new)
        .map(|(&a, &b)| (a - b).abs())
        .fold(T::zero(), T::max);
    if scale > T::zero() {
        diff / scale
    } else if diff > T::zero() {
        T::infinity()
    } else {
        T::zero()
    }
}

/// Zeroes every entry below `floor * max`.
pub(crate) fn prune<T: Real>(gamma: &mut [T], floor: T) {
    let max = gamma.iter().copied().fold(T::zero(), T::max);
    let cut = floor * max;
    for g in gamma.iter_mut() {
        if *g < cut || !(*g > T::zero()) {
            *g = T::zero();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn settings_defaults_and_validation() {
        let s = SblSettings::default();
        assert_eq!(s.max_iters, 200);
        assert_eq!(s.convergence_tol, 1e-4);
        assert_eq!(s.gamma_floor, 1e-8);
        s.validate().unwrap();
        assert!(SblSettings { convergence_tol: 0.0, ..s.clone() }.validate().is_err());
        assert!(SblSettings::with_sigma2(Sigma2Mode::Fixed(0.0)).validate().is_err());
        assert!(SblSettings { gamma_floor: -1.0, ..s }.validate().is_err());
    }

    #[test]
    fn settings_toml_round_trip() {
        let s = SblSettings::with_sigma2(Sigma2Mode::Learned(0.25));
        let txt = toml::to_string(&s).unwrap();
        let back: SblSettings = toml::from_str(&txt).unwrap();
        assert_eq!(back, s);
        let partial: SblSettings = toml::from_str("max_iters = 7").unwrap();
        assert_eq!(partial.max_iters, 7);
        assert_eq!(partial.gamma_floor, 1e-8);
    }

    #[test]
    fn uninformative_update_is_exact_identity() {
        let p = GammaHyperprior::<f64>::uninformative(3);
        for x in [0.0, 1e-300, 0.1 + 0.2, 7.5e12] {
            assert_eq!(p.gamma_update(1, x).to_bits(), x.to_bits());
        }
    }

    #[test]
    fn conjugate_update() {
        let p = GammaHyperprior::<f64>::uninformative(2)
            .updated(&[C::new(3.0, 4.0), C::new(0.0, 0.0)])
            .unwrap();
        assert_eq!(p.a, vec![0.5, 0.5]);
        assert_eq!(p.b, vec![12.5, 0.0]);
        assert!(p.updated(&[C::new(0.0, 0.0)]).is_err());
        assert!(GammaHyperprior { a: vec![-1.0], b: vec![0.0] }.validate().is_err());
    }

    #[test]
    fn pruning_and_change() {
        let mut g = vec![1.0, 1e-9, 0.5, 0.0];
        prune(&mut g, 1e-8);
        assert_eq!(g, vec![1.0, 0.0, 0.5, 0.0]);
        assert_eq!(relative_change(&[0.0, 0.0], &[0.0, 0.0]), 0.0);
        assert!((relative_change::<f64>(&[1.0, 2.0], &[1.5, 2.0]) - 0.25).abs() < 1e-15);
    }
}
