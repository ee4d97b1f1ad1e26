//! Classical bit-strings used for preparations and measured outcomes.
//!
//! Bit `i` of a [`BitString`] belongs to qubit `i`. When a bit-string is
//! interpreted as an integer (class index, prep index), the lowest qubit index
//! is the most significant bit, so `"10110"` is `0b10110 = 22`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BitString(Vec<u8>);

impl BitString {
    pub fn zeros(len: usize) -> Self {
        BitString(vec![0; len])
    }

    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::Parse(format!("bit value {b} is not 0 or 1")));
        }
        Ok(BitString(bits))
    }

    /// Bit-string of `len` bits encoding `index`, most-significant bit first.
    pub fn from_index(index: usize, len: usize) -> Self {
        debug_assert!(len >= usize::BITS as usize || index < (1usize << len));
        BitString(
            (0..len)
                .map(|i| ((index >> (len - 1 - i)) & 1) as u8)
                .collect(),
        )
    }

    pub fn index(&self) -> usize {
        self.0
            .iter()
            .fold(0usize, |acc, &b| (acc << 1) | b as usize)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> u8 {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, bit: u8) {
        self.0[i] = bit & 1;
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    /// Bits at the given positions, in the order given.
    pub fn select(&self, positions: &[usize]) -> BitString {
        BitString(positions.iter().map(|&p| self.0[p]).collect())
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(BitString(
            self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect(),
        ))
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b == 1).count()
    }

    /// All `2^len` bit-strings in index order.
    pub fn all(len: usize) -> impl Iterator<Item = BitString> {
        (0..1usize << len).map(move |i| BitString::from_index(i, len))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::Parse("empty bit-string".into()));
        }
        s.chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::Parse(format!(
                    "malformed bit-string {s:?}: unexpected character {other:?}"
                ))),
            })
            .collect::<Result<Vec<u8>>>()
            .map(BitString)
    }
}

/// A prepared basis state and what the discriminator reported for it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Outcome {
    pub prep: BitString,
    pub measured: BitString,
}
