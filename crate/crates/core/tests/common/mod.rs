//! Instance generators shared by the integration tests.
#![allow(dead_code)]

use num_traits::Zero;
use plc_sbl::noise::{sample_gm_labels, GaussianMixtureParams};
use plc_sbl::numerics::{sample_circular_gaussian, unit_circular, SimRng};
use plc_sbl::ofdm::{qpsk_map, Ofdm, OfdmConfig};
use plc_sbl::sbl::PartialDft;
use plc_sbl::C;
use rand::seq::index::sample;
use rand::Rng;

pub fn ofdm() -> Ofdm<f64> {
    Ofdm::new(&OfdmConfig::default()).expect("default layout")
}

pub fn null_op(ofdm: &Ofdm<f64>) -> PartialDft<f64> {
    PartialDft::new(ofdm.n_fft(), ofdm.nondata_tones()).expect("null tones")
}

pub fn gm3() -> GaussianMixtureParams {
    GaussianMixtureParams::new(vec![0.9, 0.07, 0.03], vec![1.0, 100.0, 1000.0]).expect("valid mixture")
}

/// `k` impulses at distinct random positions, magnitudes in `[0.5, 1.5) * amp`.
pub fn sparse(rng: &mut SimRng, n: usize, k: usize, amp: f64) -> Vec<C<f64>> {
    let mut e = vec![C::zero(); n];
    for i in sample(rng, n, k) {
        let phase = rng.gen::<f64>() * std::f64::consts::TAU;
        e[i] = C::from_polar(amp * (0.5 + rng.gen::<f64>()), phase);
    }
    e
}

pub struct Symbol {
    pub bits: Vec<u8>,
    pub y: Vec<C<f64>>,
    pub e: Vec<C<f64>>,
}

/// One uncoded QPSK symbol in mixture noise; component 0 is the background at σ².
pub fn gm_symbol(rng: &mut SimRng, ofdm: &Ofdm<f64>, mix: &GaussianMixtureParams, sigma2: f64) -> Symbol {
    let bits: Vec<u8> = (0..ofdm.bits_per_symbol()).map(|_| rng.gen_range(0..2)).collect();
    gm_transmit(rng, ofdm, mix, sigma2, bits)
}

/// Sends `bits` (one symbol's worth) through mixture noise.
pub fn gm_transmit(
    rng: &mut SimRng,
    ofdm: &Ofdm<f64>,
    mix: &GaussianMixtureParams,
    sigma2: f64,
    bits: Vec<u8>,
) -> Symbol {
    let n = ofdm.n_fft();
    let t = ofdm.modulate(&qpsk_map::<f64>(&bits), &[]).expect("modulate");
    let e: Vec<C<f64>> = sample_gm_labels(rng, mix, n)
        .into_iter()
        .map(|k| unit_circular::<f64>(rng) * (sigma2 * (mix.variances[k] / mix.variances[0] - 1.0)).sqrt())
        .collect();
    let g = sample_circular_gaussian::<f64>(rng, n, sigma2);
    let r = ofdm.apply_channel(&t, &e, &g).expect("channel");
    let y = ofdm.demodulate(&r).expect("demodulate").into_inner();
    Symbol { bits, y, e }
}
