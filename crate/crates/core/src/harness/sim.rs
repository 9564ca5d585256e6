//! Per-point Monte-Carlo simulation.

use std::time::Instant;

use num_traits::Zero;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fec::encode;
use crate::harness::{BerRecord, EstimatorKind, ExperimentConfig};
use crate::noise::{sample_gm_labels, sample_lptv, GaussianMixtureParams, LptvNoiseParams, NoiseModel};
use crate::numerics::{sample_circular_gaussian, unit_circular, SimRng};
use crate::ofdm::{qpsk_map, Ofdm, Tdi};
use crate::sbl::{
    detect_and_decode, estimate_alltone, estimate_decision_feedback, estimate_nulltone, estimate_sequential,
    PacketLayout, PartialDft, SblSettings,
};
use crate::C;

/// Simulates one SNR point of `cfg`.
pub fn run_point(cfg: &ExperimentConfig, snr_db: f64) -> Result<BerRecord> {
    Simulator::new(cfg)?.run_point(snr_db)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Tally {
    bits: u64,
    errors: u64,
    symbols: u64,
}

enum Impulsive {
    None,
    Mixture(GaussianMixtureParams),
    /// The process and the same drive through the quietest region's filter
    /// everywhere; the latter is the white background.
    Lptv(LptvNoiseParams, LptvNoiseParams),
}

/// Impulsive part `e` and background part `g` of one trial's noise.
type NoisePair = (Vec<C<f64>>, Vec<C<f64>>);

/// Receiver chain and noise scenario prepared from a validated config.
pub struct Simulator {
    cfg: ExperimentConfig,
    ofdm: Ofdm<f64>,
    op: PartialDft<f64>,
    tdi: Option<Tdi>,
    layout: Option<PacketLayout>,
    impulsive: Impulsive,
    pilots: Vec<C<f64>>,
    signal_power: f64,
}

impl Simulator {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let ofdm = Ofdm::<f64>::new(&cfg.ofdm)?;
        let op = PartialDft::with_dft(ofdm.dft().clone(), ofdm.nondata_tones())?;
        let tdi = cfg.tdi.as_ref().map(|t| Tdi::new(t, ofdm.n_fft())).transpose()?;
        let layout = if cfg.coding.enabled {
            Some(PacketLayout::fill(&cfg.coding.code, ofdm.bits_per_symbol(), cfg.coding.packet_symbols)?)
        } else {
            None
        };
        let impulsive = match &cfg.noise {
            NoiseModel::Awgn { .. } => Impulsive::None,
            NoiseModel::Lptv(spec) => {
                let p = spec.resolve()?;
                let quiet = (0..p.regions.len())
                    .min_by(|&a, &b| p.region_power(a).total_cmp(&p.region_power(b)))
                    .expect("resolved LPTV has regions");
                let mut flat = p.clone();
                let h = p.regions[quiet].filter.clone();
                flat.regions.iter_mut().for_each(|r| r.filter = h.clone());
                Impulsive::Lptv(p, flat)
            }
            _ => Impulsive::Mixture(cfg.mixture()?.expect("asynchronous model has a mixture")),
        };
        let pilots = ofdm.pilot_values();
        let probe = ofdm.assemble(&vec![C::new(1.0, 0.0); ofdm.data_tones().len()], &pilots)?;
        let signal_power = probe
            .iter()
            .zip(ofdm.channel())
            .map(|(x, h)| (x * h).norm_sqr())
            .sum::<f64>()
            / ofdm.n_fft() as f64;
        Ok(Self {
            cfg: cfg.clone(),
            ofdm,
            op,
            tdi,
            layout,
            impulsive,
            pilots,
            signal_power,
        })
    }

    /// Mean received signal power per time-domain sample.
    pub fn signal_power(&self) -> f64 {
        self.signal_power
    }

    /// Background variance σ² at `snr_db`.
    pub fn sigma2(&self, snr_db: f64) -> f64 {
        self.signal_power / 10f64.powf(snr_db / 10.0)
    }

    /// Seed of the point's trial streams; depends on the SNR value, not its
    /// position in the sweep.
    pub fn point_seed(&self, snr_db: f64) -> u64 {
        SimRng::derive(self.cfg.master_seed, &[snr_db.to_bits()]).seed()
    }

    pub fn run_point(&self, snr_db: f64) -> Result<BerRecord> {
        let start = Instant::now();
        let sigma2 = self.sigma2(snr_db);
        let mut settings = self.cfg.sbl.clone();
        settings.sigma2 = settings.sigma2.with_value(sigma2);
        let seed = self.point_seed(snr_db);
        let chunk = rayon::current_num_threads().max(1) as u64;

        let mut total = Tally::default();
        let mut next = 0u64;
        'outer: loop {
            let results: Vec<Result<Tally>> = (next..next + chunk)
                .into_par_iter()
                .map(|t| self.run_trial(sigma2, &settings, &mut SimRng::derive(seed, &[t])))
                .collect();
            next += chunk;
            // reduce strictly in trial order; later trials of a chunk are dropped
            for r in results {
                let t = r?;
                total.bits += t.bits;
                total.errors += t.errors;
                total.symbols += t.symbols;
                if self.done(&total) {
                    break 'outer;
                }
            }
        }
        Ok(BerRecord {
            estimator: self.cfg.estimator.tag().to_string(),
            noise: self.cfg.noise.tag().to_string(),
            snr_db,
            bits: total.bits,
            errors: total.errors,
            ber: total.errors as f64 / total.bits as f64,
            symbols: total.symbols,
            seed,
            elapsed_s: if self.cfg.record_timing { start.elapsed().as_secs_f64() } else { 0.0 },
        })
    }

    fn done(&self, t: &Tally) -> bool {
        let c = &self.cfg;
        t.symbols >= c.min_symbols as u64
            && (t.errors >= c.min_bit_errors as u64 || t.symbols >= c.max_symbols as u64)
    }

    /// Time-domain noise `(e, g)` for `n` consecutive samples.
    fn noise(&self, rng: &mut SimRng, n: usize, sigma2: f64) -> Result<NoisePair> {
        let white = |rng: &mut SimRng| sample_circular_gaussian::<f64>(rng, n, sigma2).into_inner();
        Ok(match &self.impulsive {
            Impulsive::None => (vec![C::zero(); n], white(rng)),
            Impulsive::Mixture(p) => {
                // component 0 is the background: γ_k/γ_0 - 1 is the excess power
                let labels = sample_gm_labels(rng, p, n);
                let g0 = p.variances[0];
                let e = labels
                    .into_iter()
                    .map(|k| {
                        let excess = (p.variances[k] / g0 - 1.0).max(0.0);
                        if excess > 0.0 {
                            unit_circular::<f64>(rng) * (sigma2 * excess).sqrt()
                        } else {
                            C::zero()
                        }
                    })
                    .collect();
                (e, white(rng))
            }
            Impulsive::Lptv(p, flat) => {
                // quietest region at power σ²; e is the excess over that region
                let phase = rng.gen_range(0..p.period);
                let s = (sigma2 / flat.region_power(0)).sqrt();
                let mut twin = rng.clone();
                let total = sample_lptv::<f64>(rng, p, n, phase)?;
                let g: Vec<C<f64>> = sample_lptv::<f64>(&mut twin, flat, n, phase)?.iter().map(|z| z * s).collect();
                let e = total.iter().zip(&g).map(|(t, b)| t * s - b).collect();
                (e, g)
            }
        })
    }

    fn run_trial(&self, sigma2: f64, settings: &SblSettings, rng: &mut SimRng) -> Result<Tally> {
        let n = self.ofdm.n_fft();
        let bps = self.ofdm.bits_per_symbol();
        let symbols = self.cfg.trial_symbols();

        // payload: information bits per packet, channel bits per symbol
        let (info, chan): (Vec<Vec<u8>>, Vec<u8>) = match &self.layout {
            Some(l) => {
                let mut info = Vec::new();
                let mut chan = Vec::with_capacity(symbols * bps);
                for _ in 0..symbols / l.symbols {
                    let b: Vec<u8> = (0..l.info_bits).map(|_| rng.gen_range(0..2)).collect();
                    chan.extend(l.pad(&encode(&self.cfg.coding.code, &b)));
                    info.push(b);
                }
                (info, chan)
            }
            None => (Vec::new(), (0..symbols * bps).map(|_| rng.gen_range(0..2)).collect()),
        };

        let (mut e, mut g) = self.noise(rng, symbols * n, sigma2)?;
        if let Some(tdi) = &self.tdi {
            // receiver deinterleaves the samples, so the channel noise arrives permuted
            e = tdi.deinterleave(&e)?;
            g = tdi.deinterleave(&g)?;
        }
        let mut ys = Vec::with_capacity(symbols);
        for s in 0..symbols {
            let bits = &chan[s * bps..(s + 1) * bps];
            let t = self.ofdm.modulate(&qpsk_map::<f64>(bits), &self.pilots)?;
            let r = self.ofdm.apply_channel(&t, &e[s * n..(s + 1) * n], &g[s * n..(s + 1) * n])?;
            ys.push(self.ofdm.demodulate(&r)?.into_inner());
        }

        let mut tally = Tally { symbols: symbols as u64, ..Tally::default() };
        match &self.layout {
            None => {
                for (s, y) in ys.iter().enumerate() {
                    let e_hat = self.estimate(y, &e[s * n..(s + 1) * n], settings)?;
                    let (_, bits) = self.ofdm.subtract_and_detect(y, &e_hat)?;
                    tally.bits += bps as u64;
                    tally.errors += bits.hamming(&chan[s * bps..(s + 1) * bps]) as u64;
                }
            }
            Some(l) => {
                for (p, msg) in info.iter().enumerate() {
                    let range = p * l.symbols..(p + 1) * l.symbols;
                    let packet = &ys[range.clone()];
                    let decoded = if self.cfg.estimator == EstimatorKind::DecisionFeedback {
                        estimate_decision_feedback(
                            packet,
                            &self.ofdm,
                            &self.op,
                            &self.cfg.coding.code,
                            l,
                            &self.cfg.feedback,
                            settings,
                        )?
                        .decoded
                    } else {
                        let e_hats = range
                            .map(|s| self.estimate(&ys[s], &e[s * n..(s + 1) * n], settings))
                            .collect::<Result<Vec<_>>>()?;
                        detect_and_decode(&self.ofdm, &self.cfg.coding.code, l, packet, &e_hats)?
                    };
                    tally.bits += l.info_bits as u64;
                    tally.errors += decoded.bits.hamming(msg) as u64;
                }
            }
        }
        Ok(tally)
    }

    /// Per-symbol noise estimate `ê`.
    fn estimate(&self, y: &[C<f64>], e_true: &[C<f64>], settings: &SblSettings) -> Result<Vec<C<f64>>> {
        let observe = || self.ofdm.observe_nondata(y, &self.pilots);
        Ok(match self.cfg.estimator {
            EstimatorKind::None => vec![C::zero(); y.len()],
            EstimatorKind::OracleSubtraction => e_true.to_vec(),
            EstimatorKind::Nulltone => estimate_nulltone(&observe()?, &self.op, settings)?.0,
            EstimatorKind::Sequential => estimate_sequential(&observe()?, &self.op, settings)?.e_hat,
            EstimatorKind::Alltone => estimate_alltone(y, &self.ofdm, &self.pilots, settings)?.0,
            EstimatorKind::DecisionFeedback => {
                return Err(Error::Config("decision_feedback runs per packet".into()));
            }
        })
    }
}
