//! OFDM transmit/receive chain over a circulant (cyclic-prefixed) channel.
//!
//! The cyclic prefix is not materialized: with a CP at least as long as the
//! channel, CP removal leaves `r = H F^H x + e + n` with `H` circulant, which
//! is applied here as a diagonal `Λ` in the frequency domain.

mod tdi;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fec::BitVector;
use crate::numerics::{ComplexVector, Dft};
use crate::scalar::{Real, C};

pub use tdi::{Tdi, TdiConfig};

/// A known pilot symbol on a non-data tone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pilot {
    pub tone: usize,
    /// `[re, im]`
    pub value: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Constellation {
    #[default]
    Qpsk,
}

/// Serializable OFDM system description. Tone indices are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfdmConfig {
    pub n_fft: usize,
    /// Data tones (the complement of null and pilot tones).
    pub data_tones: Vec<usize>,
    #[serde(default)]
    pub pilots: Vec<Pilot>,
    /// Recorded for completeness; the prefix is modeled, not inserted.
    #[serde(default)]
    pub cp_len: usize,
    #[serde(default)]
    pub constellation: Constellation,
    /// Channel frequency response `Λ` as `[re, im]` per tone; flat if absent.
    #[serde(default)]
    pub channel: Option<Vec<[f64; 2]>>,
}

impl Default for OfdmConfig {
    /// 128-point FFT, QPSK on tones 32..=103 (72 data tones), 56 nulls,
    /// no pilots, flat channel.
    fn default() -> Self {
        Self {
            n_fft: 128,
            data_tones: (32..104).collect(),
            pilots: Vec::new(),
            cp_len: 16,
            constellation: Constellation::Qpsk,
            channel: None,
        }
    }
}

impl OfdmConfig {
    pub fn validate(&self) -> Result<()> {
        let n = self.n_fft;
        if n == 0 {
            return Err(Error::Config("n_fft must be positive".into()));
        }
        let mut seen = vec![false; n];
        for &t in self.data_tones.iter().chain(self.pilots.iter().map(|p| &p.tone)) {
            if t >= n {
                return Err(Error::Config(format!("tone {t} outside [0, {n})")));
            }
            if seen[t] {
                return Err(Error::Config(format!("tone {t} assigned twice")));
            }
            seen[t] = true;
        }
        if self.data_tones.len() >= n {
            return Err(Error::Config("at least one non-data tone is required".into()));
        }
        if let Some(ch) = &self.channel {
            if ch.len() != n {
                return Err(Error::Config(format!(
                    "channel has {} taps, expected {n}",
                    ch.len()
                )));
            }
            for (i, c) in ch.iter().enumerate() {
                if !(c[0].hypot(c[1]) > 0.0) || !c[0].is_finite() || !c[1].is_finite() {
                    return Err(Error::Config(format!("channel tone {i} is zero or non-finite")));
                }
            }
        }
        Ok(())
    }

    /// Sorted non-data tone set `I` (nulls and pilots).
    pub fn nondata_tones(&self) -> Vec<usize> {
        let mut data = vec![false; self.n_fft];
        for &t in &self.data_tones {
            data[t] = true;
        }
        (0..self.n_fft).filter(|&t| !data[t]).collect()
    }

    pub fn bits_per_symbol(&self) -> usize {
        2 * self.data_tones.len()
    }

    pub fn is_flat(&self) -> bool {
        self.channel
            .as_ref()
            .map_or(true, |ch| ch.iter().all(|c| c[0] == 1.0 && c[1] == 0.0))
    }
}

/// QPSK Gray map: `(b1, b0) -> ((1 - 2 b1) + i (1 - 2 b0)) / sqrt(2)`.
pub fn qpsk_map<T: Real>(bits: &[u8]) -> Vec<C<T>> {
    let s = T::FRAC_1_SQRT_2();
    bits.chunks(2)
        .map(|p| {
            let b1 = p[0];
            let b0 = p.get(1).copied().unwrap_or(0);
            C::new(
                if b1 == 0 { s } else { -s },
                if b0 == 0 { s } else { -s },
            )
        })
        .collect()
}

/// Minimum-distance QPSK demapping to hard bits.
pub fn qpsk_demap<T: Real>(symbols: &[C<T>]) -> Vec<u8> {
    symbols
        .iter()
        .flat_map(|z| [(z.re < T::zero()) as u8, (z.im < T::zero()) as u8])
        .collect()
}

/// Per-symbol OFDM engine built from an [`OfdmConfig`].
#[derive(Debug, Clone)]
pub struct Ofdm<T: Real> {
    n: usize,
    data: Vec<usize>,
    nondata: Vec<usize>,
    pilots: Vec<(usize, C<T>)>,
    channel: Vec<C<T>>,
    flat: bool,
    dft: Dft<T>,
}

impl<T: Real> Ofdm<T> {
    pub fn new(cfg: &OfdmConfig) -> Result<Self> {
        cfg.validate()?;
        let mut data = cfg.data_tones.clone();
        data.sort_unstable();
        let channel = match &cfg.channel {
            Some(ch) => ch.iter().map(|c| C::new(T::of(c[0]), T::of(c[1]))).collect(),
            None => vec![C::new(T::one(), T::zero()); cfg.n_fft],
        };
        Ok(Self {
            n: cfg.n_fft,
            data,
            nondata: cfg.nondata_tones(),
            pilots: cfg
                .pilots
                .iter()
                .map(|p| (p.tone, C::new(T::of(p.value[0]), T::of(p.value[1]))))
                .collect(),
            channel,
            flat: cfg.is_flat(),
            dft: Dft::new(cfg.n_fft),
        })
    }

    pub fn n_fft(&self) -> usize {
        self.n
    }

    pub fn data_tones(&self) -> &[usize] {
        &self.data
    }

    pub fn nondata_tones(&self) -> &[usize] {
        &self.nondata
    }

    pub fn channel(&self) -> &[C<T>] {
        &self.channel
    }

    pub fn dft(&self) -> &Dft<T> {
        &self.dft
    }

    pub fn pilot_values(&self) -> Vec<C<T>> {
        self.pilots.iter().map(|p| p.1).collect()
    }

    pub fn bits_per_symbol(&self) -> usize {
        2 * self.data.len()
    }

    fn check_len(&self, context: &'static str, expected: usize, got: usize) -> Result<()> {
        if expected != got {
            return Err(Error::DimensionMismatch {
                context,
                expected,
                got,
            });
        }
        Ok(())
    }

    /// Frequency-domain symbol `x`: data on `Ī`, pilots on their tones,
    /// zeros on nulls.
    pub fn assemble(&self, data_symbols: &[C<T>], pilot_values: &[C<T>]) -> Result<Vec<C<T>>> {
        self.check_len("data symbols", self.data.len(), data_symbols.len())?;
        self.check_len("pilot values", self.pilots.len(), pilot_values.len())?;
        let mut x = vec![C::zero(); self.n];
        for (&t, &s) in self.data.iter().zip(data_symbols) {
            x[t] = s;
        }
        for (&(t, _), &v) in self.pilots.iter().zip(pilot_values) {
            x[t] = v;
        }
        Ok(x)
    }

    /// Time-domain symbol `F^H x`.
    pub fn modulate(&self, data_symbols: &[C<T>], pilot_values: &[C<T>]) -> Result<ComplexVector<T>> {
        let mut x = self.assemble(data_symbols, pilot_values)?;
        self.dft.inverse_in_place(&mut x);
        Ok(x.into())
    }

    /// `r = H s + e + n` with circulant `H` applied as `Λ` per tone.
    pub fn apply_channel(&self, signal: &[C<T>], e: &[C<T>], n: &[C<T>]) -> Result<ComplexVector<T>> {
        self.check_len("signal", self.n, signal.len())?;
        self.check_len("impulsive noise", self.n, e.len())?;
        self.check_len("background noise", self.n, n.len())?;
        let mut r = signal.to_vec();
        if !self.flat {
            self.dft.forward_in_place(&mut r);
            for (v, h) in r.iter_mut().zip(&self.channel) {
                *v = *v * h;
            }
            self.dft.inverse_in_place(&mut r);
        }
        for ((v, a), b) in r.iter_mut().zip(e).zip(n) {
            *v = *v + a + b;
        }
        Ok(r.into())
    }

    /// `y = F r`
    pub fn demodulate(&self, r: &[C<T>]) -> Result<ComplexVector<T>> {
        self.check_len("received symbol", self.n, r.len())?;
        Ok(self.dft.forward(r).into())
    }

    /// Known part of `Λx` on the non-data tones, in `I` order (zero on nulls).
    pub fn known_nondata(&self, pilot_values: &[C<T>]) -> Result<Vec<C<T>>> {
        self.check_len("pilot values", self.pilots.len(), pilot_values.len())?;
        let mut out = vec![C::zero(); self.nondata.len()];
        for (&(t, _), &v) in self.pilots.iter().zip(pilot_values) {
            let pos = self.nondata.binary_search(&t).expect("pilot is a non-data tone");
            out[pos] = self.channel[t] * v;
        }
        Ok(out)
    }

    /// `z = y_I - (Λx)_I = F_I e + g_I`.
    pub fn observe_nondata(&self, y: &[C<T>], pilot_values: &[C<T>]) -> Result<ComplexVector<T>> {
        self.check_len("received spectrum", self.n, y.len())?;
        let known = self.known_nondata(pilot_values)?;
        Ok(self
            .nondata
            .iter()
            .zip(known)
            .map(|(&t, k)| y[t] - k)
            .collect::<Vec<_>>()
            .into())
    }

    /// Subtracts `F ê` on the data tones, equalizes per tone and demaps.
    pub fn subtract_and_detect(&self, y: &[C<T>], e_hat: &[C<T>]) -> Result<(ComplexVector<T>, BitVector)> {
        self.check_len("received spectrum", self.n, y.len())?;
        self.check_len("noise estimate", self.n, e_hat.len())?;
        let fe = self.dft.forward(e_hat);
        let symbols: Vec<C<T>> = self
            .data
            .iter()
            .map(|&t| (y[t] - fe[t]) / self.channel[t])
            .collect();
        let bits = BitVector::from(qpsk_demap(&symbols));
        Ok((symbols.into(), bits))
    }
}
