//! SNR sweeps with an atomically rewritten, resumable CSV.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::harness::{BerRecord, ExperimentConfig, Simulator};

pub const CSV_HEADER: &str = "estimator,noise,snr_db,bits,errors,ber,symbols,seed,elapsed_s";

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

pub fn write_csv<W: Write>(out: W, records: &[BerRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r).map_err(csv_err)?;
    }
    if records.is_empty() {
        w.write_record(CSV_HEADER.split(',')).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<BerRecord>> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = rdr.headers().map_err(csv_err)?.iter().collect::<Vec<_>>().join(",");
    if header != CSV_HEADER {
        return Err(Error::Config(format!("{}: unexpected CSV header `{header}`", path.display())));
    }
    rdr.deserialize().map(|r| r.map_err(csv_err)).collect()
}

fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".tmp");
    path.with_file_name(name)
}

/// Writes through a sibling temp file and a rename.
fn write_atomic(path: &Path, records: &[BerRecord]) -> Result<()> {
    let tmp = tmp_path(path);
    let file = fs::File::create(&tmp).map_err(|e| Error::Io(format!("{}: {e}", tmp.display())))?;
    write_csv(std::io::BufWriter::new(file), records)?;
    fs::rename(&tmp, path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(())
}

/// Runs every SNR point of `cfg`, in order.
///
/// With `out`, rows already present for the same estimator, noise and SNR
/// are reused instead of simulated, and the file is rewritten after each new
/// point so an interrupted sweep can be resumed.
pub fn run_sweep(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Vec<BerRecord>> {
    let sim = Simulator::new(cfg)?;
    let mut existing = match out {
        Some(p) if p.exists() => read_csv(p)?,
        _ => Vec::new(),
    };
    if let Some(p) = out {
        // fail on an unwritable destination before spending any time
        write_atomic(p, &existing)?;
    }
    let (est, noise) = (cfg.estimator.tag(), cfg.noise.tag());
    let mut records = Vec::with_capacity(cfg.snr_points.len());
    for &snr in &cfg.snr_points {
        let done = existing
            .iter()
            .find(|r| r.estimator == est && r.noise == noise && r.snr_db == snr)
            .cloned();
        let rec = match done {
            Some(r) => {
                log::info!("{est}/{noise} {snr} dB: reusing stored point");
                r
            }
            None => {
                let r = sim.run_point(snr)?;
                log::info!("{est}/{noise} {snr} dB: BER {:.3e} over {} symbols", r.ber, r.symbols);
                existing.push(r.clone());
                if let Some(p) = out {
                    write_atomic(p, &existing)?;
                }
                r
            }
        };
        records.push(rec);
    }
    Ok(records)
}
