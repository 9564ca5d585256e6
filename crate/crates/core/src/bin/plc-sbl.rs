//! Command-line front end: `run` sweeps, `gain` comparisons, `selftest`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use plc_sbl::harness::{read_csv, run_sweep, selftest, snr_gain, EstimatorKind, ExperimentConfig};
use plc_sbl::noise::{GaussianMixtureParams, LptvSpec, MiddletonClassAParams, NoiseModel};
use plc_sbl::Error;

#[derive(Parser)]
#[command(name = "plc-sbl", version, about = "OFDM powerline BER simulator with SBL impulsive-noise cancellation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an SNR sweep and write its CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides master_seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated SNR points in dB.
        #[arg(long, value_delimiter = ',')]
        snr: Option<Vec<f64>>,
        #[arg(long)]
        estimator: Option<String>,
        /// `gm`, `mca`, `awgn`, or a path to an LPTV TOML file.
        #[arg(long)]
        noise: Option<String>,
        /// Fixed symbol count per point.
        #[arg(long)]
        symbols: Option<usize>,
    },
    /// SNR gain of one CSV curve over another at a target BER.
    Gain {
        baseline: PathBuf,
        candidate: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        target: f64,
    },
    /// Quick invariant checks.
    Selftest,
}

fn noise_override(s: &str) -> Result<NoiseModel, Error> {
    Ok(match s {
        "gm" => NoiseModel::Gm(GaussianMixtureParams::new(vec![0.9, 0.07, 0.03], vec![1.0, 100.0, 1000.0])?),
        "mca" => NoiseModel::Mca(MiddletonClassAParams { a: 0.1, omega: 0.01, truncation: 10 }),
        "awgn" => NoiseModel::Awgn { variance: 1.0 },
        path => NoiseModel::Lptv(LptvSpec::load(path).map_err(|e| Error::Config(format!("--noise {path}: {e}")))?),
    })
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config, out, seed, snr, estimator, noise, symbols } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            if let Some(points) = snr {
                cfg.snr_points = points;
            }
            if let Some(e) = estimator {
                cfg.estimator = EstimatorKind::from_tag(&e)?;
            }
            if let Some(n) = noise {
                cfg.noise = noise_override(&n)?;
            }
            if let Some(n) = symbols {
                cfg.min_symbols = n;
                cfg.max_symbols = n;
            }
            cfg.validate()?;
            let records = run_sweep(&cfg, out.as_deref())?;
            println!("{:>18} {:>6} {:>8} {:>12} {:>10} {:>8}", "estimator", "noise", "snr_db", "ber", "errors", "symbols");
            for r in &records {
                println!(
                    "{:>18} {:>6} {:>8.2} {:>12.4e} {:>10} {:>8}",
                    r.estimator, r.noise, r.snr_db, r.ber, r.errors, r.symbols
                );
            }
        }
        Command::Gain { baseline, candidate, target } => {
            let a = read_csv(&baseline)?;
            let b = read_csv(&candidate)?;
            println!("{:.3}", snr_gain(&a, &b, target)?);
        }
        Command::Selftest => {
            let mut failed = 0;
            for c in selftest::run_all()? {
                println!("{} {:<28} {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
                failed += usize::from(!c.pass);
            }
            if failed > 0 {
                return Err(Error::InvalidParameter(format!("{failed} self-test check(s) failed")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
