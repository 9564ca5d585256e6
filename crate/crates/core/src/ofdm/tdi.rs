//! Time-domain sample interleaving across a block of OFDM symbols.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::SimRng;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TdiConfig {
    /// OFDM symbols interleaved jointly.
    pub depth: usize,
    pub seed: u64,
}

impl Default for TdiConfig {
    fn default() -> Self {
        Self { depth: 100, seed: 0x7D1 }
    }
}

/// A fixed random permutation of `depth * n_fft` sample positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tdi {
    depth: usize,
    n_fft: usize,
    perm: Vec<usize>,
}

impl Tdi {
    pub fn new(cfg: &TdiConfig, n_fft: usize) -> Result<Self> {
        if cfg.depth == 0 || n_fft == 0 {
            return Err(Error::Config("TDI depth and FFT size must be positive".into()));
        }
        let mut perm: Vec<usize> = (0..cfg.depth * n_fft).collect();
        perm.shuffle(&mut SimRng::new(cfg.seed));
        Ok(Self {
            depth: cfg.depth,
            n_fft,
            perm,
        })
    }

    /// Builds from an explicit permutation; rejects non-bijections.
    pub fn from_permutation(depth: usize, n_fft: usize, perm: Vec<usize>) -> Result<Self> {
        if perm.len() != depth * n_fft {
            return Err(Error::DimensionMismatch {
                context: "TDI permutation",
                expected: depth * n_fft,
                got: perm.len(),
            });
        }
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidParameter("TDI permutation is not a bijection".into()));
            }
        }
        Ok(Self { depth, n_fft, perm })
    }

    pub fn identity(depth: usize, n_fft: usize) -> Self {
        Self {
            depth,
            n_fft,
            perm: (0..depth * n_fft).collect(),
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn block_len(&self) -> usize {
        self.perm.len()
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.perm.len() {
            return Err(Error::DimensionMismatch {
                context: "TDI block",
                expected: self.depth * self.n_fft,
                got: len,
            });
        }
        Ok(())
    }

    /// `out[i] = input[perm[i]]`
    pub fn interleave<X: Copy>(&self, input: &[X]) -> Result<Vec<X>> {
        self.check(input.len())?;
        Ok(self.perm.iter().map(|&p| input[p]).collect())
    }

    /// Inverse of [`Tdi::interleave`].
    pub fn deinterleave<X: Copy + Default>(&self, input: &[X]) -> Result<Vec<X>> {
        self.check(input.len())?;
        let mut out = vec![X::default(); input.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            out[p] = input[i];
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn identity_is_noop() {
        let t = Tdi::identity(3, 4);
        let x: Vec<u32> = (0..12).collect();
        assert_eq!(t.interleave(&x).unwrap(), x);
        assert_eq!(t.deinterleave(&x).unwrap(), x);
    }

    #[test]
    fn round_trip_all_depths() {
        let mut rng = SimRng::new(3);
        for depth in [1usize, 2, 10, 100] {
            let t = Tdi::new(&TdiConfig { depth, seed: depth as u64 }, 128).unwrap();
            let x: Vec<u64> = (0..depth * 128).map(|_| rng.gen()).collect();
            let y = t.interleave(&x).unwrap();
            assert_eq!(t.deinterleave(&y).unwrap(), x);
            assert!(t.interleave(&x[1..]).is_err());
        }
    }

    #[test]
    fn rejects_non_bijection() {
        assert!(Tdi::from_permutation(1, 3, vec![0, 0, 1]).is_err());
        assert!(Tdi::from_permutation(1, 3, vec![2, 0, 1]).is_ok());
    }

    #[test]
    fn burst_spreads_hypergeometrically() {
        // A contiguous burst of L samples at the deinterleaver input lands in
        // each symbol as a hypergeometric count: mean L/depth.
        let (depth, n, burst) = (10usize, 32usize, 8usize);
        let total = depth * n;
        let mut counts = Vec::new();
        for seed in 0..400u64 {
            let t = Tdi::new(&TdiConfig { depth, seed }, n).unwrap();
            let start = (seed as usize * 37) % (total - burst);
            let mut rx = vec![0u8; total];
            rx[start..start + burst].iter_mut().for_each(|v| *v = 1);
            let out = t.deinterleave(&rx).unwrap();
            for s in 0..depth {
                counts.push(out[s * n..(s + 1) * n].iter().map(|&v| v as f64).sum::<f64>());
            }
        }
        let m = counts.len() as f64;
        let mean = counts.iter().sum::<f64>() / m;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / m;
        let p = n as f64 / total as f64;
        let expect_var =
            burst as f64 * p * (1.0 - p) * (total - burst) as f64 / (total - 1) as f64;
        assert!((mean - burst as f64 / depth as f64).abs() < 1e-12);
        assert!((var / expect_var - 1.0).abs() < 0.1, "{var} vs {expect_var}");
    }
}
