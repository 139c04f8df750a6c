//! Random bit sources and the two DDG samplers.

use alloc::vec;
use alloc::vec::Vec;

use dashu_int::{IBig, UBig};
use thiserror::Error;

use crate::ddg::{LinearEncoding, ProbabilityMatrix};
use crate::numsys::Rational;

/// Deepest bit string length accepted by [`enumerate_outcomes`].
pub const MAX_ENUMERATION_DEPTH: u32 = 24;

/// The finite input ran out before the sampler halted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("bit source exhausted before the sampler halted")]
pub struct NeedMoreBits;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("enumeration depth {0} exceeds {MAX_ENUMERATION_DEPTH}")]
pub struct DepthExceeded(pub u32);

pub trait BitSource {
    fn next_bit(&mut self) -> Result<bool, NeedMoreBits>;

    /// Total bits handed out so far.
    fn bits_consumed(&self) -> u64;
}

impl<S: BitSource + ?Sized> BitSource for &mut S {
    #[inline]
    fn next_bit(&mut self) -> Result<bool, NeedMoreBits> {
        (**self).next_bit()
    }

    fn bits_consumed(&self) -> u64 {
        (**self).bits_consumed()
    }
}

/// splitmix64 words, each read most significant bit first.
#[derive(Debug, Clone)]
pub struct SplitMix64Source {
    state: u64,
    buffer: u64,
    remaining: u32,
    consumed: u64,
}

impl SplitMix64Source {
    pub fn new(seed: u64) -> Self {
        Self { state: seed, buffer: 0, remaining: 0, consumed: 0 }
    }

    /// Next raw 64-bit output, bypassing the bit buffer.
    pub fn next_word(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

impl BitSource for SplitMix64Source {
    #[inline]
    fn next_bit(&mut self) -> Result<bool, NeedMoreBits> {
        if self.remaining == 0 {
            self.buffer = self.next_word();
            self.remaining = 64;
        }
        self.remaining -= 1;
        self.consumed += 1;
        Ok((self.buffer >> self.remaining) & 1 == 1)
    }

    fn bits_consumed(&self) -> u64 {
        self.consumed
    }
}

/// A finite bit string; reading past the end yields [`NeedMoreBits`].
#[derive(Debug, Clone, Default)]
pub struct FixedBitsSource {
    bits: Vec<bool>,
    pos: usize,
}

impl FixedBitsSource {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits, pos: 0 }
    }

    /// The low `len` bits of `word`, most significant first.
    pub fn from_word(word: u64, len: u32) -> Self {
        let mut s = Self::default();
        s.load_word(word, len);
        s
    }

    /// Replaces the contents and rewinds.
    pub fn load_word(&mut self, word: u64, len: u32) {
        self.bits.clear();
        self.bits.extend((0..len).rev().map(|i| (word >> i) & 1 == 1));
        self.pos = 0;
    }

    pub fn remaining(&self) -> usize {
        self.bits.len() - self.pos
    }
}

impl BitSource for FixedBitsSource {
    #[inline]
    fn next_bit(&mut self) -> Result<bool, NeedMoreBits> {
        let b = *self.bits.get(self.pos).ok_or(NeedMoreBits)?;
        self.pos += 1;
        Ok(b)
    }

    fn bits_consumed(&self) -> u64 {
        self.pos as u64
    }
}

/// Walks the encoding from cell 0; returns the 0-based outcome.
#[inline]
pub fn sample_encoding<S: BitSource + ?Sized>(enc: &LinearEncoding, src: &mut S) -> Result<usize, NeedMoreBits> {
    let cells = enc.cells();
    let root = cells[0];
    if root < 0 {
        return Ok((-root - 1) as usize);
    }
    let mut c = 0usize;
    loop {
        let b = src.next_bit()? as usize;
        c = cells[c + b] as usize;
        let v = cells[c];
        if v < 0 {
            return Ok((-v - 1) as usize);
        }
    }
}

/// Samples straight from the matrix, rescanning a column per bit.
pub fn sample_matrix<S: BitSource + ?Sized>(p: &ProbabilityMatrix, src: &mut S) -> Result<usize, NeedMoreBits> {
    let (k, l) = (p.k() as usize, p.l() as usize);
    let mut d: i64 = 0;
    let mut c = 0usize;
    loop {
        let b = src.next_bit()? as i64;
        d = 2 * d + (1 - b);
        for r in 0..p.n() {
            d -= p.bit(r, c) as i64;
            if d == -1 {
                return Ok(r);
            }
        }
        c = if c == k - 1 { l } else { c + 1 };
    }
}

/// Draws `num` samples and returns per-outcome counts.
pub fn sample_counts<S: BitSource + ?Sized>(enc: &LinearEncoding, src: &mut S, num: u64) -> Result<Vec<u64>, NeedMoreBits> {
    let mut counts = vec![0u64; enc.n()];
    for _ in 0..num {
        counts[sample_encoding(enc, src)?] += 1;
    }
    Ok(counts)
}

/// Outcome masses over every bit string of one length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Enumeration {
    pub masses: Vec<Rational>,
    /// Mass of strings too short to reach an outcome.
    pub bottom: Rational,
    /// `E[min(k, bits used)]`.
    pub expected_bits_truncated: Rational,
}

/// Runs `sampler` on all `2^k` strings of length `k`.
pub fn enumerate_outcomes<F>(n: usize, k: u32, mut sampler: F) -> Result<Enumeration, DepthExceeded>
where
    F: FnMut(&mut FixedBitsSource) -> Result<usize, NeedMoreBits>,
{
    if k > MAX_ENUMERATION_DEPTH {
        return Err(DepthExceeded(k));
    }
    let mut counts = vec![0u64; n];
    let mut bottom = 0u64;
    let mut used = 0u64;
    let mut src = FixedBitsSource::default();
    for word in 0..1u64 << k {
        src.load_word(word, k);
        match sampler(&mut src) {
            Ok(i) => {
                counts[i] += 1;
                used += src.bits_consumed();
            }
            Err(NeedMoreBits) => {
                bottom += 1;
                used += k as u64;
            }
        }
    }
    let total = UBig::ONE << k as usize;
    let frac = |c: u64| Rational::from_parts(IBig::from(c), total.clone());
    Ok(Enumeration {
        masses: counts.into_iter().map(frac).collect(),
        bottom: frac(bottom),
        expected_bits_truncated: frac(used),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ddg::{build_encoding, build_matrix};
    use crate::numsys::PrecisionSpec;
    use crate::optimize::Assignment;

    fn r(n: i64, d: u64) -> Rational {
        Rational::from_parts(IBig::from(n), UBig::from(d))
    }

    fn assignment(m: &[u64], spec: PrecisionSpec) -> Assignment {
        Assignment::new(m.iter().map(|&x| UBig::from(x)).collect(), spec.z()).unwrap()
    }

    fn bits(s: &str) -> FixedBitsSource {
        FixedBitsSource::new(s.bytes().map(|b| b == b'1').collect())
    }

    #[test]
    fn splitmix_reference() {
        let mut s = SplitMix64Source::new(0);
        assert_eq!(s.next_word(), 0xE220_A839_7B1D_CDAF);
        let mut s = SplitMix64Source::new(0);
        let first: Vec<bool> = (0..4).map(|_| s.next_bit().unwrap()).collect();
        // 0xE = 1110
        assert_eq!(first, vec![true, true, true, false]);
        assert_eq!(s.bits_consumed(), 4);
    }

    #[test]
    fn example_traces() {
        let spec = PrecisionSpec::dyadic(2).unwrap();
        let m = assignment(&[2, 1, 1], spec);
        let enc = build_encoding(&m, spec).unwrap();
        let p = build_matrix(&m, spec).unwrap();
        for (s, want) in [("1", 0), ("01", 1), ("00", 2)] {
            assert_eq!(sample_encoding(&enc, &mut bits(s)), Ok(want));
            assert_eq!(sample_matrix(&p, &mut bits(s)), Ok(want));
        }
        assert_eq!(sample_encoding(&enc, &mut bits("0")), Err(NeedMoreBits));
        assert_eq!(sample_matrix(&p, &mut bits("")), Err(NeedMoreBits));
    }

    #[test]
    fn enumeration_examples() {
        let spec = PrecisionSpec::dyadic(2).unwrap();
        let enc = build_encoding(&assignment(&[2, 1, 1], spec), spec).unwrap();
        let e = enumerate_outcomes(3, 2, |s| sample_encoding(&enc, s)).unwrap();
        assert_eq!(e.masses, vec![r(1, 2), r(1, 4), r(1, 4)]);
        assert_eq!(e.bottom, Rational::ZERO);
        assert_eq!(e.expected_bits_truncated, r(3, 2));

        let spec = PrecisionSpec::new(5, 1).unwrap();
        let enc = build_encoding(&assignment(&[9, 21], spec), spec).unwrap();
        let e = enumerate_outcomes(2, 4, |s| sample_encoding(&enc, s)).unwrap();
        assert_eq!(e.masses, vec![r(4, 16), r(11, 16)]);
        assert_eq!(e.bottom, r(1, 16));
        assert!(enumerate_outcomes(2, 25, |s| sample_encoding(&enc, s)).is_err());
    }

    #[test]
    fn degenerate_consumes_nothing() {
        let spec = PrecisionSpec::dyadic(3).unwrap();
        let enc = LinearEncoding::degenerate(2, 1, spec);
        let mut src = SplitMix64Source::new(7);
        assert_eq!(sample_encoding(&enc, &mut src), Ok(1));
        assert_eq!(src.bits_consumed(), 0);
    }
}
