use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

/// An ordered string of classical bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![false; len])
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        Self((0..len).map(|_| rng.gen()).collect())
    }

    /// The low `len` bits of `value`, most significant first.
    pub fn from_u64(value: u64, len: usize) -> Self {
        Self((0..len).rev().map(|i| i < 64 && (value >> i) & 1 == 1).collect())
    }

    /// Parses a hex literal (with or without `0x`) into exactly `len` bits,
    /// most significant first. Values needing more than `len` bits are rejected.
    pub fn from_hex(hex: &str, len: usize) -> Result<Self> {
        let digits = hex.trim().trim_start_matches("0x").trim_start_matches("0X");
        if digits.is_empty() {
            return Err(Error::Parse(format!("empty hex string `{hex}`")));
        }
        let mut raw = Vec::with_capacity(digits.len() * 4);
        for c in digits.chars() {
            let d = c
                .to_digit(16)
                .ok_or_else(|| Error::Parse(format!("invalid hex digit `{c}` in `{hex}`")))?;
            raw.extend((0..4).rev().map(|i| (d >> i) & 1 == 1));
        }
        let excess = raw.len().saturating_sub(len);
        if raw[..excess].iter().any(|&b| b) {
            return Err(Error::Parse(format!("`{hex}` does not fit in {len} bits")));
        }
        let mut bits = vec![false; len.saturating_sub(raw.len())];
        bits.extend_from_slice(&raw[excess..]);
        Ok(Self(bits))
    }

    pub fn to_hex(&self) -> String {
        let pad = (4 - self.0.len() % 4) % 4;
        let padded: Vec<bool> = std::iter::repeat_n(false, pad).chain(self.0.iter().copied()).collect();
        let digits: String = padded
            .chunks(4)
            .map(|c| {
                let v = c.iter().fold(0u32, |acc, &b| (acc << 1) | u32::from(b));
                char::from_digit(v, 16).unwrap_or('0')
            })
            .collect();
        format!("0x{digits}")
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        self.0.get(i).copied()
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] = !self.0[i];
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(Self(self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect()))
    }

    pub fn complement(&self) -> BitString {
        Self(self.0.iter().map(|b| !b).collect())
    }

    /// Indices holding a 1.
    pub fn ones(&self) -> Vec<usize> {
        self.0.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn as_u64(&self) -> u64 {
        self.0.iter().fold(0, |acc, &b| (acc << 1) | u64::from(b))
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|&b| f.write_str(if b { "1" } else { "0" }))
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Parse(format!("invalid bit `{c}`"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }
}
