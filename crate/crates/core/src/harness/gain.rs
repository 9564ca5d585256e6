//! BER-curve interpolation and the AWGN reference.

use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::harness::BerRecord;

/// Uncoded unit-energy QPSK over per-tone noise of variance `sigma2`:
/// `Q(1/σ)`.
pub fn qpsk_awgn_ber(sigma2: f64) -> f64 {
    0.5 * erfc(1.0 / (2.0 * sigma2).sqrt())
}

fn log_ber(r: &BerRecord) -> f64 {
    // an error-free point counts as half an error so the log stays finite
    let errors = if r.errors == 0 { 0.5 } else { r.errors as f64 };
    (errors / r.bits as f64).ln()
}

/// SNR where the curve first falls through `target`, interpolating
/// `log BER` linearly in dB between the bracketing points.
pub fn snr_at_ber(curve: &[BerRecord], target: f64, name: &str) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidParameter(format!("target BER {target} outside (0, 1)")));
    }
    let mut pts: Vec<&BerRecord> = curve.iter().filter(|r| r.bits > 0).collect();
    pts.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db));
    let lt = target.ln();
    for w in pts.windows(2) {
        let (la, lb) = (log_ber(w[0]), log_ber(w[1]));
        if la >= lt && lb < lt {
            let frac = (lt - la) / (lb - la);
            return Ok(w[0].snr_db + frac * (w[1].snr_db - w[0].snr_db));
        }
    }
    Err(Error::NoCrossing(name.to_string()))
}

/// SNR gain of `b` over `a` at `target`: how much earlier `b` reaches it.
pub fn snr_gain(curve_a: &[BerRecord], curve_b: &[BerRecord], target: f64) -> Result<f64> {
    let name = |c: &[BerRecord], dflt: &str| c.first().map_or(dflt.to_string(), |r| r.estimator.clone());
    let a = snr_at_ber(curve_a, target, &name(curve_a, "curve_a"))?;
    let b = snr_at_ber(curve_b, target, &name(curve_b, "curve_b"))?;
    Ok(a - b)
}
