//! Decision-feedback estimator: decoder decisions on the data tones are
//! turned into a second noise estimate `ẽ`, which enters the null-tone SBL
//! through a Gamma hyperprior on the precisions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fec::{encode, viterbi_decode, BitVector, ConvCode, Decoded};
use crate::ofdm::{qpsk_map, Ofdm};
use crate::sbl::em::{estimate_nulltone, estimate_nulltone_with_prior};
use crate::sbl::operator::PartialDft;
use crate::sbl::{GammaHyperprior, SblSettings, SblState};
use crate::scalar::{Real, C};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeedbackSettings {
    /// Feedback passes after the initial null-tone pass.
    pub rounds: usize,
    /// Base hyperprior shape `a`, applied to every sample.
    pub prior_a: f64,
    /// Base hyperprior rate `b`, applied to every sample.
    pub prior_b: f64,
}

impl Default for FeedbackSettings {
    fn default() -> Self {
        Self {
            rounds: 2,
            prior_a: 0.0,
            prior_b: 0.0,
        }
    }
}

impl FeedbackSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.prior_a >= 0.0 && self.prior_b >= 0.0) {
            return Err(Error::InvalidParameter("hyperprior a, b must be ≥ 0".into()));
        }
        Ok(())
    }
}

/// One codeword spread over the data tones of `symbols` OFDM symbols,
/// zero-padded at the end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PacketLayout {
    pub symbols: usize,
    pub info_bits: usize,
    pub coded_bits: usize,
    pub bits_per_symbol: usize,
}

impl PacketLayout {
    /// Largest message that fits `symbols` symbols of `bits_per_symbol` bits.
    pub fn fill(code: &ConvCode, bits_per_symbol: usize, symbols: usize) -> Result<Self> {
        code.validate()?;
        let capacity = bits_per_symbol * symbols;
        let info_bits = code.info_len(capacity);
        if symbols == 0 || info_bits == 0 {
            return Err(Error::Config(format!(
                "packet of {symbols} symbols cannot carry a codeword"
            )));
        }
        Ok(Self {
            symbols,
            info_bits,
            coded_bits: code.coded_len(info_bits),
            bits_per_symbol,
        })
    }

    pub fn capacity(&self) -> usize {
        self.symbols * self.bits_per_symbol
    }

    /// Codeword followed by zero padding up to the packet capacity.
    pub fn pad(&self, codeword: &[u8]) -> Vec<u8> {
        let mut v = codeword.to_vec();
        v.resize(self.capacity(), 0);
        v
    }
}

#[derive(Debug, Clone)]
pub struct FeedbackEstimate<T> {
    /// Final per-symbol noise estimates.
    pub e_hat: Vec<Vec<C<T>>>,
    /// Final decoder output.
    pub decoded: Decoded,
    /// Information-bit decisions after each pass, initial pass first.
    pub history: Vec<BitVector>,
    pub states: Vec<SblState<T>>,
}

/// Detects and decodes a packet given per-symbol noise estimates.
pub fn detect_and_decode<T: Real>(
    ofdm: &Ofdm<T>,
    code: &ConvCode,
    layout: &PacketLayout,
    ys: &[Vec<C<T>>],
    e_hat: &[Vec<C<T>>],
) -> Result<Decoded> {
    let mut hard = Vec::with_capacity(layout.capacity());
    for (y, e) in ys.iter().zip(e_hat) {
        let (_, bits) = ofdm.subtract_and_detect(y, e)?;
        hard.extend_from_slice(&bits);
    }
    viterbi_decode(code, &hard[..layout.coded_bits])
}

/// Decision-feedback estimator over one packet of received spectra `ys`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_decision_feedback<T: Real>(
    ys: &[Vec<C<T>>],
    ofdm: &Ofdm<T>,
    op: &PartialDft<T>,
    code: &ConvCode,
    layout: &PacketLayout,
    feedback: &FeedbackSettings,
    settings: &SblSettings,
) -> Result<FeedbackEstimate<T>> {
    feedback.validate()?;
    if ys.len() != layout.symbols {
        return Err(Error::DimensionMismatch {
            context: "packet symbols",
            expected: layout.symbols,
            got: ys.len(),
        });
    }
    if op.row_indices() != ofdm.nondata_tones() {
        return Err(Error::InvalidParameter("operator rows differ from the non-data tones".into()));
    }
    let n = ofdm.n_fft();
    let pilots = ofdm.pilot_values();
    let zs = ys
        .iter()
        .map(|y| ofdm.observe_nondata(y, &pilots).map(|z| z.into_inner()))
        .collect::<Result<Vec<_>>>()?;

    let mut e_hat = Vec::with_capacity(ys.len());
    let mut states = Vec::with_capacity(ys.len());
    for z in &zs {
        let (e, st) = estimate_nulltone(z, op, settings)?;
        e_hat.push(e);
        states.push(st);
    }
    let mut decoded = detect_and_decode(ofdm, code, layout, ys, &e_hat)?;
    let mut history = vec![decoded.bits.clone()];

    let base = GammaHyperprior {
        a: vec![T::of(feedback.prior_a); n],
        b: vec![T::of(feedback.prior_b); n],
    };
    for _ in 0..feedback.rounds {
        let coded = layout.pad(&encode(code, &decoded.bits));
        for (s, (y, z)) in ys.iter().zip(&zs).enumerate() {
            let chunk = &coded[s * layout.bits_per_symbol..(s + 1) * layout.bits_per_symbol];
            let x = ofdm.assemble(&qpsk_map::<T>(chunk), &pilots)?;
            // ẽ = F^H (y - Λ x̂) over all tones
            let resid: Vec<C<T>> = y
                .iter()
                .zip(&x)
                .zip(ofdm.channel())
                .map(|((yk, xk), h)| yk - xk * h)
                .collect();
            let e_tilde = ofdm.dft().inverse(&resid);
            let prior = base.updated(&e_tilde)?;
            let (e, st) = estimate_nulltone_with_prior(z, op, settings, &prior)?;
            e_hat[s] = e;
            states[s] = st;
        }
        decoded = detect_and_decode(ofdm, code, layout, ys, &e_hat)?;
        history.push(decoded.bits.clone());
    }
    Ok(FeedbackEstimate {
        e_hat,
        decoded,
        history,
        states,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{sample_circular_gaussian, SimRng};
    use crate::ofdm::OfdmConfig;
    use crate::sbl::Sigma2Mode;
    use rand::Rng;

    struct Packet {
        bits: Vec<u8>,
        ys: Vec<Vec<C<f64>>>,
    }

    fn packet(rng: &mut SimRng, ofdm: &Ofdm<f64>, layout: &PacketLayout, sigma2: f64, impulses: usize) -> Packet {
        let code = ConvCode::default();
        let bits: Vec<u8> = (0..layout.info_bits).map(|_| rng.gen_range(0..2)).collect();
        let coded = layout.pad(&encode(&code, &bits));
        let mut ys = Vec::new();
        for s in 0..layout.symbols {
            let chunk = &coded[s * 144..(s + 1) * 144];
            let t = ofdm.modulate(&qpsk_map::<f64>(chunk), &[]).unwrap();
            let mut e = vec![C::new(0.0, 0.0); 128];
            for i in rand::seq::index::sample(rng, 128, impulses) {
                e[i] = C::from_polar(3.0, rng.gen::<f64>() * 6.0);
            }
            let g = sample_circular_gaussian::<f64>(rng, 128, sigma2);
            let r = ofdm.apply_channel(&t, &e, &g).unwrap();
            ys.push(ofdm.demodulate(&r).unwrap().into_inner());
        }
        Packet { bits, ys }
    }

    fn setup() -> (Ofdm<f64>, PartialDft<f64>, PacketLayout) {
        let ofdm = Ofdm::new(&OfdmConfig::default()).unwrap();
        let op = PartialDft::new(128, ofdm.nondata_tones()).unwrap();
        let layout = PacketLayout::fill(&ConvCode::default(), 144, 2).unwrap();
        (ofdm, op, layout)
    }

    #[test]
    fn layout_fills_symbols() {
        let l = PacketLayout::fill(&ConvCode::default(), 144, 10).unwrap();
        assert_eq!(l.info_bits, 714);
        assert_eq!(l.coded_bits, 1440);
        assert!(PacketLayout::fill(&ConvCode::default(), 144, 0).is_err());
    }

    #[test]
    fn zero_rounds_equals_nulltone() {
        let (ofdm, op, layout) = setup();
        let mut rng = SimRng::new(4);
        let p = packet(&mut rng, &ofdm, &layout, 0.05, 6);
        let s = SblSettings::with_sigma2(Sigma2Mode::Fixed(0.05));
        let fb = FeedbackSettings { rounds: 0, ..Default::default() };
        let out = estimate_decision_feedback(&p.ys, &ofdm, &op, &ConvCode::default(), &layout, &fb, &s).unwrap();
        for (y, e) in p.ys.iter().zip(&out.e_hat) {
            let z = ofdm.observe_nondata(y, &[]).unwrap();
            let (nt, _) = estimate_nulltone(&z, &op, &s).unwrap();
            assert_eq!(&nt, e);
        }
        assert_eq!(out.history.len(), 1);
    }

    #[test]
    fn clean_channel_is_a_fixed_point() {
        let (ofdm, op, layout) = setup();
        let mut rng = SimRng::new(5);
        let p = packet(&mut rng, &ofdm, &layout, 1e-3, 0);
        let s = SblSettings::with_sigma2(Sigma2Mode::Fixed(1e-3));
        let out = estimate_decision_feedback(
            &p.ys,
            &ofdm,
            &op,
            &ConvCode::default(),
            &layout,
            &FeedbackSettings::default(),
            &s,
        )
        .unwrap();
        assert_eq!(out.history.len(), 3);
        for h in &out.history {
            assert_eq!(&h[..], &p.bits[..]);
        }
    }

    #[test]
    fn rejects_wrong_symbol_count() {
        let (ofdm, op, layout) = setup();
        let s = SblSettings::default();
        let ys = vec![vec![C::new(0.0, 0.0); 128]];
        assert!(estimate_decision_feedback(&ys, &ofdm, &op, &ConvCode::default(), &layout, &FeedbackSettings::default(), &s)
            .is_err());
    }
}
