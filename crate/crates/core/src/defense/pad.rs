use std::collections::BTreeMap;

use rand::Rng;

use crate::bits::BitString;
use crate::error::{Error, Result};

/// Secret X-gate pattern over a user's qubits. Bit `i` of `pad` applies to
/// qubit `qubits[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OneTimePad {
    pub pad: BitString,
    pub qubits: Vec<usize>,
}

impl OneTimePad {
    pub fn new(pad: BitString, qubits: Vec<usize>) -> Result<OneTimePad> {
        if pad.len() != qubits.len() {
            return Err(Error::DimensionMismatch {
                expected: qubits.len(),
                found: pad.len(),
            });
        }
        Ok(OneTimePad { pad, qubits })
    }

    /// Uniformly random pad over `qubits`.
    pub fn random<R: Rng + ?Sized>(qubits: &[usize], rng: &mut R) -> OneTimePad {
        let bits = qubits.iter().map(|_| rng.random_range(0..2u8)).collect();
        OneTimePad {
            pad: BitString::from_bits(bits).expect("bits are 0 or 1"),
            qubits: qubits.to_vec(),
        }
    }

    fn xor_into(&self, bits: &BitString) -> Result<BitString> {
        let mut out = bits.clone();
        for (i, &q) in self.qubits.iter().enumerate() {
            if q >= out.len() {
                return Err(Error::DimensionMismatch {
                    expected: q + 1,
                    found: out.len(),
                });
            }
            out.set(q, out.get(q) ^ self.pad.get(i));
        }
        Ok(out)
    }
}

/// Preparation with the padded qubits flipped: X gates before measurement
/// flip the measured basis state.
pub fn apply_pad(prep: &BitString, pad: &OneTimePad) -> Result<BitString> {
    pad.xor_into(prep)
}

/// Undo the pad on a measured bit-string.
pub fn unscramble(measured: &BitString, pad: &OneTimePad) -> Result<BitString> {
    pad.xor_into(measured)
}

/// Relabel every outcome of a histogram through the pad.
pub fn scramble_histogram(
    hist: &BTreeMap<BitString, u64>,
    pad: &OneTimePad,
) -> Result<BTreeMap<BitString, u64>> {
    hist.iter()
        .map(|(b, &c)| Ok((apply_pad(b, pad)?, c)))
        .collect()
}

/// Number of outcomes with non-zero count.
pub fn support_size(hist: &BTreeMap<BitString, u64>) -> usize {
    hist.values().filter(|&&c| c > 0).count()
}

/// Total-variation distance between two count histograms.
pub fn total_variation(a: &BTreeMap<BitString, u64>, b: &BTreeMap<BitString, u64>) -> f64 {
    let na: u64 = a.values().sum();
    let nb: u64 = b.values().sum();
    let pa = |k: &BitString| a.get(k).map_or(0.0, |&c| c as f64 / na.max(1) as f64);
    let pb = |k: &BitString| b.get(k).map_or(0.0, |&c| c as f64 / nb.max(1) as f64);
    let keys: std::collections::BTreeSet<&BitString> = a.keys().chain(b.keys()).collect();
    0.5 * keys.into_iter().map(|k| (pa(k) - pb(k)).abs()).sum::<f64>()
}

pub fn histogram<'a, I: IntoIterator<Item = &'a BitString>>(bits: I) -> BTreeMap<BitString, u64> {
    let mut h = BTreeMap::new();
    for b in bits {
        *h.entry(b.clone()).or_insert(0) += 1;
    }
    h
}
