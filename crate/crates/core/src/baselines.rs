//! Rejection and limited-precision inversion samplers, with exact formulas
//! for their output distributions and bit consumption.

use alloc::vec::Vec;

use dashu_base::{BitTest, UnsignedAbs};
use dashu_int::{IBig, UBig};
use thiserror::Error;

use crate::divergence::{divergence_between, DivergenceError, EvalContext, GeneratorKind};
use crate::extreal::ExtReal;
use crate::numsys::{validate_distribution, NumSysError, Rational};
use crate::optimize::Assignment;
use crate::runtime::{BitSource, NeedMoreBits};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BaselineError {
    #[error("Z = {z} is not in (2^(k-1), 2^k] for k = {k}")]
    BadWidth { z: UBig, k: u32 },
    #[error("precision k must be at least 1")]
    ZeroPrecision,
    #[error(transparent)]
    Distribution(#[from] NumSysError),
    #[error(transparent)]
    Divergence(#[from] DivergenceError),
    #[error(transparent)]
    NeedMoreBits(#[from] NeedMoreBits),
}

fn draw<S: BitSource + ?Sized>(k: u32, src: &mut S) -> Result<UBig, NeedMoreBits> {
    let mut w = UBig::ZERO;
    for _ in 0..k {
        w <<= 1;
        if src.next_bit()? {
            w += UBig::ONE;
        }
    }
    Ok(w)
}

fn bucket(cumulative: &[UBig], w: &UBig) -> usize {
    cumulative.partition_point(|c| c <= w)
}

/// Smallest `k` with `Z <= 2^k`.
pub fn rejection_width(z: &UBig) -> u32 {
    if z <= &UBig::ONE {
        0
    } else {
        (z - UBig::ONE).bit_len() as u32
    }
}

/// Draws `k`-bit integers until one lands below `Z`.
#[derive(Debug, Clone)]
pub struct RejectionSampler {
    cumulative: Vec<UBig>,
    z: UBig,
    k: u32,
}

impl RejectionSampler {
    pub fn new(m: &Assignment) -> Self {
        let mut acc = UBig::ZERO;
        let cumulative = m
            .numerators()
            .iter()
            .map(|x| {
                acc += x;
                acc.clone()
            })
            .collect();
        let z = m.denominator().clone();
        Self { k: rejection_width(&z), cumulative, z }
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn sample<S: BitSource + ?Sized>(&self, src: &mut S) -> Result<usize, NeedMoreBits> {
        loop {
            let w = draw(self.k, src)?;
            if w < self.z {
                return Ok(bucket(&self.cumulative, &w));
            }
        }
    }
}

pub fn rejection_sample<S: BitSource + ?Sized>(m: &Assignment, src: &mut S) -> Result<usize, NeedMoreBits> {
    RejectionSampler::new(m).sample(src)
}

/// `k 2^k / Z`.
pub fn rejection_expected_bits(z: &UBig, k: u32) -> Result<Rational, BaselineError> {
    let full = UBig::ONE << k as usize;
    let low = if k == 0 { UBig::ZERO } else { UBig::ONE << (k - 1) as usize };
    if z > &full || z <= &low {
        return Err(BaselineError::BadWidth { z: z.clone(), k });
    }
    Ok(Rational::from_parts(IBig::from(full * UBig::from(k)), z.clone()))
}

/// Comparison used to pick the outcome from `U' = W / 2^k`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum InversionRule {
    /// Smallest `j` with `U' < P_j`.
    #[default]
    Strict,
    /// Smallest `j` with `U' <= P_j`.
    NonStrict,
}

fn cumulative(p: &[Rational]) -> Vec<Rational> {
    let mut acc = Rational::ZERO;
    p.iter()
        .map(|x| {
            acc += x;
            acc.clone()
        })
        .collect()
}

fn scaled_floor(x: &Rational, k: u32) -> UBig {
    let v = x.numerator().unsigned_abs() << k as usize;
    v / x.denominator()
}

fn scaled_ceil(x: &Rational, k: u32) -> UBig {
    let v = x.numerator().unsigned_abs() << k as usize;
    let d = x.denominator();
    (v + d - UBig::ONE) / d
}

fn is_scaled_integer(x: &Rational, k: u32) -> bool {
    let v = x.numerator().unsigned_abs() << k as usize;
    (v % x.denominator()).is_zero()
}

/// Inversion with a `k`-bit uniform. Outcome `j` covers the integers `W`
/// below threshold `t_j` (strict) or up to `t_j` (non-strict).
#[derive(Debug, Clone)]
pub struct InversionSampler {
    thresholds: Vec<UBig>,
    k: u32,
    rule: InversionRule,
}

impl InversionSampler {
    pub fn new(p: &[Rational], k: u32, rule: InversionRule) -> Result<Self, BaselineError> {
        validate_distribution(p)?;
        if k == 0 {
            return Err(BaselineError::ZeroPrecision);
        }
        let thresholds = cumulative(p)
            .iter()
            .map(|c| match rule {
                InversionRule::Strict => scaled_ceil(c, k),
                InversionRule::NonStrict => scaled_floor(c, k),
            })
            .collect();
        Ok(Self { thresholds, k, rule })
    }

    /// Always reads exactly `k` bits.
    pub fn sample<S: BitSource + ?Sized>(&self, src: &mut S) -> Result<usize, NeedMoreBits> {
        let w = draw(self.k, src)?;
        let j = match self.rule {
            InversionRule::Strict => self.thresholds.partition_point(|t| t <= &w),
            InversionRule::NonStrict => self.thresholds.partition_point(|t| t < &w),
        };
        Ok(j)
    }
}

pub fn inversion_sample<S: BitSource + ?Sized>(
    p: &[Rational],
    k: u32,
    src: &mut S,
) -> Result<usize, BaselineError> {
    let s = InversionSampler::new(p, k, InversionRule::Strict)?;
    Ok(s.sample(src)?)
}

/// Closed-form output distribution of the inversion sampler.
///
/// The non-strict rule follows the published case formula; the strict rule
/// counts `ceil(2^k P_j) - ceil(2^k P_{j-1})`.
pub fn inversion_output_distribution(
    p: &[Rational],
    k: u32,
    rule: InversionRule,
) -> Result<Vec<Rational>, BaselineError> {
    validate_distribution(p)?;
    if k == 0 {
        return Err(BaselineError::ZeroPrecision);
    }
    let cum = cumulative(p);
    let mut counts: Vec<IBig> = Vec::with_capacity(p.len());
    match rule {
        InversionRule::Strict => {
            let mut prev = UBig::ZERO;
            for c in &cum {
                let t = scaled_ceil(c, k);
                counts.push(IBig::from(t.clone()) - IBig::from(prev));
                prev = t;
            }
        }
        InversionRule::NonStrict => {
            for (i, c) in cum.iter().enumerate() {
                let not_one = c != &Rational::ONE;
                let v = if i == 0 {
                    IBig::from(scaled_floor(c, k)) + IBig::from(not_one as u8)
                } else {
                    let base = IBig::from(scaled_ceil(c, k)) - IBig::from(scaled_floor(&cum[i - 1], k));
                    if is_scaled_integer(c, k) && not_one {
                        base
                    } else {
                        base - IBig::ONE
                    }
                };
                counts.push(v.max(IBig::ZERO));
            }
        }
    }
    let total = counts.iter().fold(IBig::ZERO, |a, c| a + c);
    let full = IBig::from(UBig::ONE << k as usize);
    // the terms sum to 2^k; normalize by the sum so a mismatch still yields
    // a distribution, and the enumeration cross-check catches it
    let denom = if total.is_zero() { full } else { total };
    let denom = denom.unsigned_abs();
    Ok(counts.into_iter().map(|c| Rational::from_parts(c, denom.clone())).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaselineMethod {
    Rejection,
    Inversion,
}

#[derive(Debug, Clone)]
pub struct BaselineReport {
    pub method: BaselineMethod,
    pub output_distribution: Vec<Rational>,
    pub expected_bits: Rational,
    pub error_vs_target: ExtReal,
}

/// Rejection sampling of `M` measured against target `p`.
pub fn rejection_report(
    p: &[Rational],
    m: &Assignment,
    kind: &GeneratorKind,
    ctx: &EvalContext,
) -> Result<BaselineReport, BaselineError> {
    let k = rejection_width(m.denominator());
    let q = m.probabilities();
    Ok(BaselineReport {
        method: BaselineMethod::Rejection,
        expected_bits: rejection_expected_bits(m.denominator(), k)?,
        error_vs_target: divergence_between(p, &q, kind, ctx)?,
        output_distribution: q,
    })
}

/// `k`-bit inversion of `p` measured against `p` itself.
pub fn inversion_report(
    p: &[Rational],
    k: u32,
    rule: InversionRule,
    kind: &GeneratorKind,
    ctx: &EvalContext,
) -> Result<BaselineReport, BaselineError> {
    let q = inversion_output_distribution(p, k, rule)?;
    Ok(BaselineReport {
        method: BaselineMethod::Inversion,
        expected_bits: Rational::from(k),
        error_vs_target: divergence_between(p, &q, kind, ctx)?,
        output_distribution: q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::{enumerate_outcomes, FixedBitsSource};
    use alloc::vec;

    fn r(n: i64, d: u64) -> Rational {
        Rational::from_parts(IBig::from(n), UBig::from(d))
    }

    fn bits(s: &str) -> FixedBitsSource {
        FixedBitsSource::new(s.bytes().map(|b| b == b'1').collect())
    }

    fn assignment(m: &[u64]) -> Assignment {
        let z = m.iter().sum::<u64>();
        Assignment::new(m.iter().map(|&x| UBig::from(x)).collect(), UBig::from(z)).unwrap()
    }

    #[test]
    fn rejection_trace() {
        let m = assignment(&[1, 1, 1]);
        let mut src = bits("1101");
        assert_eq!(rejection_sample(&m, &mut src), Ok(1));
        assert_eq!(src.bits_consumed(), 4);
        let coin = assignment(&[1, 1]);
        let mut src = bits("1");
        assert_eq!(rejection_sample(&coin, &mut src), Ok(1));
    }

    #[test]
    fn rejection_bits() {
        assert_eq!(rejection_expected_bits(&UBig::from(2u8), 1).unwrap(), r(1, 1));
        assert_eq!(rejection_expected_bits(&UBig::from(3u8), 2).unwrap(), r(8, 3));
        assert_eq!(rejection_expected_bits(&UBig::from(1u32 << 16), 16).unwrap(), r(16, 1));
        assert!(rejection_expected_bits(&UBig::from(5u8), 2).is_err());
        assert!(rejection_expected_bits(&UBig::from(2u8), 2).is_err());
    }

    #[test]
    fn inversion_examples() {
        let p = [r(3, 10), r(7, 10)];
        let mut src = bits("10");
        assert_eq!(inversion_sample(&p, 2, &mut src), Ok(1));
        for rule in [InversionRule::Strict, InversionRule::NonStrict] {
            assert_eq!(inversion_output_distribution(&p, 2, rule).unwrap(), vec![r(1, 2), r(1, 2)]);
            let thirds = [r(1, 3), r(1, 3), r(1, 3)];
            assert_eq!(inversion_output_distribution(&thirds, 2, rule).unwrap(), vec![r(1, 2), r(1, 4), r(1, 4)]);
        }
        let dyadic = [r(1, 4), r(3, 8), r(3, 8)];
        let strict = inversion_output_distribution(&dyadic, 3, InversionRule::Strict).unwrap();
        assert_eq!(strict, dyadic.to_vec());
        let loose = inversion_output_distribution(&dyadic, 3, InversionRule::NonStrict).unwrap();
        assert_eq!(loose, vec![r(3, 8), r(3, 8), r(1, 4)]);
    }

    #[test]
    fn rules_differ_on_boundaries() {
        // W = 2^k P_1 exactly goes to outcome 0 only under the non-strict rule
        let p = [r(1, 2), r(1, 2)];
        let strict = inversion_output_distribution(&p, 1, InversionRule::Strict).unwrap();
        let loose = inversion_output_distribution(&p, 1, InversionRule::NonStrict).unwrap();
        assert_eq!(strict, vec![r(1, 2), r(1, 2)]);
        assert_eq!(loose, vec![r(1, 1), r(0, 1)]);
        for (rule, want) in [(InversionRule::Strict, strict), (InversionRule::NonStrict, loose)] {
            let s = InversionSampler::new(&p, 1, rule).unwrap();
            let e = enumerate_outcomes(2, 1, |src| s.sample(src)).unwrap();
            assert_eq!(e.masses, want);
        }
    }
}
