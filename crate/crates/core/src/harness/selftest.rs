//! Fast invariant checks behind the `selftest` subcommand.

use num_traits::Zero;
use rand::Rng;

use crate::error::Result;
use crate::fec::{encode, viterbi_decode, ConvCode};
use crate::harness::{qpsk_awgn_ber, run_point, EstimatorKind, ExperimentConfig};
use crate::noise::{GaussianMixtureParams, NoiseModel};
use crate::numerics::{max_abs_diff, sample_circular_gaussian, unit_circular, ComplexMatrix, SimRng};
use crate::ofdm::{qpsk_map, Ofdm, OfdmConfig};
use crate::sbl::{
    estimate_alltone, estimate_nulltone, sbl_posterior, sbl_posterior_direct, PartialDft, SblSettings, Sigma2Mode,
};
use crate::C;

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

pub fn run_all() -> Result<Vec<Check>> {
    Ok(vec![
        posterior_forms()?,
        em_monotone()?,
        viterbi_is_ml()?,
        awgn_reference()?,
        deterministic_point()?,
    ])
}

fn posterior_forms() -> Result<Check> {
    let mut rng = SimRng::new(11);
    let mut worst: f64 = 0.0;
    for (m, n) in [(8, 16), (20, 48), (56, 128)] {
        let data = sample_circular_gaussian::<f64>(&mut rng, m * n, 1.0 / m as f64).into_inner();
        let phi = ComplexMatrix::from_row_major(m, n, data)?;
        let t = sample_circular_gaussian::<f64>(&mut rng, m, 1.0).into_inner();
        let gamma: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 0.05).collect();
        let a = sbl_posterior(&phi, &t, &gamma, 0.3)?;
        let b = sbl_posterior_direct(&phi, &t, &gamma, 0.3)?;
        worst = worst.max(max_abs_diff(&a.mu, &b.mu)).max(a.sigma.max_abs_diff(&b.sigma));
    }
    Ok(Check {
        name: "posterior forms agree",
        pass: worst < 1e-10,
        detail: format!("max |Δ| = {worst:.2e}"),
    })
}

fn em_monotone() -> Result<Check> {
    let ofdm = Ofdm::<f64>::new(&OfdmConfig::default())?;
    let op = PartialDft::new(128, ofdm.nondata_tones())?;
    let mix = GaussianMixtureParams::new(vec![0.9, 0.07, 0.03], vec![1.0, 100.0, 1000.0])?;
    let mut rng = SimRng::new(12);
    let sigma2 = 0.01;
    let settings = SblSettings::with_sigma2(Sigma2Mode::Fixed(sigma2));
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..10 {
        let bits: Vec<u8> = (0..144).map(|_| rng.gen_range(0..2)).collect();
        let t = ofdm.modulate(&qpsk_map::<f64>(&bits), &[])?;
        let e: Vec<C<f64>> = crate::noise::sample_gm_labels(&mut rng, &mix, 128)
            .into_iter()
            .map(|k| unit_circular::<f64>(&mut rng) * (sigma2 * (mix.variances[k] - 1.0)).sqrt())
            .collect();
        let g = sample_circular_gaussian::<f64>(&mut rng, 128, sigma2);
        let y = ofdm.demodulate(&ofdm.apply_channel(&t, &e, &g)?)?;
        let z = ofdm.observe_nondata(&y, &[])?;
        let (_, a) = estimate_nulltone(&z, &op, &settings)?;
        let (_, _, b) = estimate_alltone(&y, &ofdm, &[], &settings)?;
        for ll in [&a.log_likelihood, &b.log_likelihood] {
            for w in ll.windows(2) {
                worst = worst.max(w[0] - w[1]);
            }
        }
    }
    Ok(Check {
        name: "EM evidence non-decreasing",
        pass: worst <= 1e-9,
        detail: format!("largest drop {:.2e}", worst.max(0.0)),
    })
}

fn viterbi_is_ml() -> Result<Check> {
    let code = ConvCode::default();
    let mut rng = SimRng::new(13);
    let mut mismatches = 0;
    for _ in 0..100 {
        let len = rng.gen_range(1..=8);
        let msg: Vec<u8> = (0..len).map(|_| rng.gen_range(0..2)).collect();
        let mut rx = encode(&code, &msg).into_inner();
        for b in rx.iter_mut() {
            if rng.gen::<f64>() < 0.15 {
                *b ^= 1;
            }
        }
        let best = (0u32..1 << len)
            .map(|w| {
                let cand: Vec<u8> = (0..len).map(|i| ((w >> i) & 1) as u8).collect();
                encode(&code, &cand).hamming(&rx)
            })
            .min()
            .expect("non-empty message space");
        let dec = viterbi_decode(&code, &rx)?;
        if dec.distance != best || encode(&code, &dec.bits).hamming(&rx) != best {
            mismatches += 1;
        }
    }
    Ok(Check {
        name: "Viterbi is ML",
        pass: mismatches == 0,
        detail: format!("{mismatches}/100 mismatches"),
    })
}

fn awgn_reference() -> Result<Check> {
    let mut cfg = ExperimentConfig::new(NoiseModel::Awgn { variance: 1.0 }, EstimatorKind::None, vec![4.8]);
    cfg.min_symbols = 50;
    cfg.min_bit_errors = 200;
    let r = run_point(&cfg, 4.8)?;
    let sigma2 = (72.0 / 128.0) / 10f64.powf(0.48);
    let want = qpsk_awgn_ber(sigma2);
    let rel = (r.ber - want).abs() / want;
    // loose: this run only collects a few hundred errors
    Ok(Check {
        name: "AWGN matches Q(1/σ)",
        pass: rel < 0.25,
        detail: format!("{:.3e} vs {want:.3e}", r.ber),
    })
}

fn deterministic_point() -> Result<Check> {
    let mix = GaussianMixtureParams::new(vec![0.9, 0.1], vec![1.0, 100.0])?;
    let mut cfg = ExperimentConfig::new(NoiseModel::Gm(mix), EstimatorKind::Nulltone, vec![10.0]);
    cfg.record_timing = false;
    cfg.min_symbols = 8;
    cfg.max_symbols = 8;
    let a = run_point(&cfg, 10.0)?;
    let b = run_point(&cfg, 10.0)?;
    Ok(Check {
        name: "seeded point is reproducible",
        pass: a == b && !a.bits.is_zero(),
        detail: format!("{} errors in {} bits", a.errors, a.bits),
    })
}
