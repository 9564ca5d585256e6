//! Rate-1/2 convolutional code with hard-decision Viterbi decoding.

use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered 0/1 sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BitVector(Vec<u8>);

impl BitVector {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidParameter("bit vector element not in {0,1}".into()));
        }
        Ok(Self(bits))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.0
    }

    pub fn hamming(&self, other: &[u8]) -> usize {
        self.0.iter().zip(other).filter(|(a, b)| a != b).count()
    }

    pub fn xor(&self, other: &BitVector) -> BitVector {
        BitVector(self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect())
    }
}

impl From<Vec<u8>> for BitVector {
    fn from(v: Vec<u8>) -> Self {
        debug_assert!(v.iter().all(|&b| b <= 1));
        Self(v)
    }
}

impl Deref for BitVector {
    type Target = [u8];
    fn deref(&self) -> &[u8] {
        &self.0
    }
}

impl DerefMut for BitVector {
    fn deref_mut(&mut self) -> &mut [u8] {
        &mut self.0
    }
}

/// Feed-forward rate-1/2 convolutional code. Generators are given in octal
/// with the most significant tap on the current input bit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvCode {
    pub constraint_length: usize,
    pub generators: [u32; 2],
    /// Append `K-1` zero tail bits so the trellis ends in state 0.
    #[serde(default = "default_true")]
    pub terminate: bool,
}

fn default_true() -> bool {
    true
}

impl Default for ConvCode {
    /// K=7, (133, 171) octal, zero-terminated.
    fn default() -> Self {
        Self {
            constraint_length: 7,
            generators: [0o133, 0o171],
            terminate: true,
        }
    }
}

impl ConvCode {
    pub fn validate(&self) -> Result<()> {
        let k = self.constraint_length;
        if !(2..=16).contains(&k) {
            return Err(Error::InvalidParameter(format!("constraint length {k} unsupported")));
        }
        for &g in &self.generators {
            if g == 0 || g >> k != 0 {
                return Err(Error::InvalidParameter(format!(
                    "generator {g:o} empty or wider than K={k}"
                )));
            }
        }
        Ok(())
    }

    fn memory(&self) -> usize {
        self.constraint_length - 1
    }

    fn states(&self) -> usize {
        1 << self.memory()
    }

    /// Coded length for `info_bits` message bits.
    pub fn coded_len(&self, info_bits: usize) -> usize {
        2 * (info_bits + if self.terminate { self.memory() } else { 0 })
    }

    /// Largest message that fits in `coded_bits` channel bits.
    pub fn info_len(&self, coded_bits: usize) -> usize {
        let steps = coded_bits / 2;
        if self.terminate {
            steps.saturating_sub(self.memory())
        } else {
            steps
        }
    }

    /// Output pair and next state for `input` entering `state`.
    #[inline]
    fn step(&self, state: usize, input: u8) -> ([u8; 2], usize) {
        let reg = ((input as usize) << self.memory()) | state;
        let out = [
            ((reg as u32 & self.generators[0]).count_ones() & 1) as u8,
            ((reg as u32 & self.generators[1]).count_ones() & 1) as u8,
        ];
        (out, reg >> 1)
    }
}

/// Encodes `bits`, flushing with `K-1` zeros when the code terminates.
pub fn encode(code: &ConvCode, bits: &[u8]) -> BitVector {
    let tail = if code.terminate { code.memory() } else { 0 };
    let mut out = Vec::with_capacity(code.coded_len(bits.len()));
    let mut state = 0;
    for &b in bits.iter().chain(std::iter::repeat_n(&0, tail)) {
        let (pair, next) = code.step(state, b);
        out.extend_from_slice(&pair);
        state = next;
    }
    BitVector(out)
}

/// Decoder output: message estimate and its re-encoded codeword.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    pub bits: BitVector,
    pub codeword: BitVector,
    /// Hamming distance between the input and `codeword`.
    pub distance: usize,
}

/// Minimum-Hamming-distance (maximum-likelihood on a BSC) decoding.
pub fn viterbi_decode(code: &ConvCode, hard_bits: &[u8]) -> Result<Decoded> {
    code.validate()?;
    if !hard_bits.len().is_multiple_of(2) {
        return Err(Error::DimensionMismatch {
            context: "viterbi input (even length)",
            expected: hard_bits.len() + 1,
            got: hard_bits.len(),
        });
    }
    let steps = hard_bits.len() / 2;
    let mem = code.memory();
    if code.terminate && steps < mem {
        return Err(Error::DimensionMismatch {
            context: "viterbi input (shorter than tail)",
            expected: 2 * mem,
            got: hard_bits.len(),
        });
    }
    let ns = code.states();
    // branch outputs for (state, input), packed as 2-bit symbol
    let branch: Vec<[u8; 2]> = (0..ns)
        .flat_map(|s| {
            let (o0, _) = code.step(s, 0);
            let (o1, _) = code.step(s, 1);
            [o0[0] << 1 | o0[1], o1[0] << 1 | o1[1]]
        })
        .collect::<Vec<u8>>()
        .chunks(2)
        .map(|c| [c[0], c[1]])
        .collect();

    const INF: u32 = u32::MAX / 2;
    let mut metric = vec![INF; ns];
    metric[0] = 0;
    let mut next = vec![INF; ns];
    // survivor: which predecessor low bit was taken, per step and state
    let mut decisions = vec![0u8; steps * ns];
    let half = ns >> 1;
    for t in 0..steps {
        let rx = hard_bits[2 * t] << 1 | hard_bits[2 * t + 1];
        let dec = &mut decisions[t * ns..(t + 1) * ns];
        for (s_next, slot) in next.iter_mut().enumerate() {
            let input = (s_next >= half) as usize;
            let base = (s_next << 1) & (ns - 1);
            let mut best = INF;
            let mut pick = 0u8;
            for low in 0..2usize {
                let prev = base | low;
                let m = metric[prev];
                if m >= INF {
                    continue;
                }
                let out = branch[prev][input];
                let d = m + (out ^ rx).count_ones();
                if d < best {
                    best = d;
                    pick = low as u8;
                }
            }
            *slot = best;
            dec[s_next] = pick;
        }
        std::mem::swap(&mut metric, &mut next);
    }

    let mut state = if code.terminate {
        0
    } else {
        (0..ns).min_by_key(|&s| metric[s]).unwrap_or(0)
    };
    let distance = metric[state] as usize;
    let mut path = vec![0u8; steps];
    for t in (0..steps).rev() {
        path[t] = (state >= half) as u8;
        let low = decisions[t * ns + state] as usize;
        state = ((state << 1) & (ns - 1)) | low;
    }
    let info = if code.terminate { steps - mem } else { steps };
    path.truncate(info);
    let bits = BitVector(path);
    let codeword = encode(code, &bits);
    Ok(Decoded {
        bits,
        codeword,
        distance,
    })
}
