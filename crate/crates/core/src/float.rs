//! Binary floating point helpers on top of `dashu-float`.
//!
//! The logarithm here is a fixed-point `atanh` series. It is much faster than
//! the generic `FBig::ln` at a few hundred bits, which matters because the
//! optimizer evaluates logarithms in its inner loop.

use dashu_base::{BitTest, UnsignedAbs};
use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use dashu_int::{IBig, UBig};

use crate::numsys::Rational;

/// Binary float, round-half-even, with a per-value precision.
pub type Float = FBig<HalfEven, 2>;

/// Guard bits carried through fixed-point intermediate results.
const GUARD: usize = 64;

pub fn float_from_int(v: &UBig, precision: usize) -> Float {
    Float::from_parts(IBig::from(v.clone()), 0).with_precision(precision).value()
}

/// Correctly rounded `r` at `precision` bits.
pub fn float_from_rational(r: &Rational, precision: usize) -> Float {
    let num = Float::from_parts(r.numerator().clone(), 0).with_precision(precision).value();
    let den = Float::from_parts(IBig::from(r.denominator().clone()), 0)
        .with_precision(precision)
        .value();
    num / den
}

/// Exact rational value of a float.
pub fn float_to_rational(x: &Float) -> Rational {
    let repr = x.repr();
    let sig = repr.significand().clone();
    let exp = repr.exponent();
    if exp >= 0 {
        Rational::from(sig << exp as usize)
    } else {
        Rational::from_parts(sig, UBig::ONE << (-exp) as usize)
    }
}

fn bit_len(v: &UBig) -> usize {
    v.bit_len()
}

/// Fixed-point `atanh(s) * 2^w` for a fixed-point `s` with `|s| < 1/2`.
fn atanh_fixed(s: &IBig, w: usize) -> IBig {
    // run on |s| so the truncating shifts reach zero
    let x = s.unsigned_abs();
    let x2 = (&x * &x) >> w;
    let mut term = x.clone();
    let mut sum = x;
    let mut j: u64 = 1;
    loop {
        term = (&term * &x2) >> w;
        if term.is_zero() {
            break;
        }
        sum += &term / UBig::from(2 * j + 1);
        j += 1;
    }
    if s < &IBig::ZERO {
        -IBig::from(sum)
    } else {
        IBig::from(sum)
    }
}

/// Natural logarithm at a fixed working precision.
///
/// Keeps `ln 2` in fixed point so repeated calls only pay for the series.
#[derive(Debug, Clone)]
pub struct LnContext {
    precision: usize,
    width: usize,
    ln2: IBig,
}

impl LnContext {
    pub fn new(precision: usize) -> Self {
        let width = precision + GUARD;
        Self { precision, width, ln2: Self::ln2_at(width) }
    }

    fn ln2_at(width: usize) -> IBig {
        // ln 2 = 2 atanh(1/3)
        let third = (IBig::ONE << width) / IBig::from(3u8);
        atanh_fixed(&third, width) << 1
    }

    pub fn precision(&self) -> usize {
        self.precision
    }

    /// `ln(num / den)` rounded to the context precision. Requires positive inputs.
    pub fn ln_ratio(&self, num: &UBig, den: &UBig) -> Float {
        assert!(!num.is_zero() && !den.is_zero(), "logarithm of zero");
        if num == den {
            return Float::ZERO.with_precision(self.precision).value();
        }
        // near 1 the result is small; widen so its relative error stays bounded
        let diff = if num > den { num - den } else { den - num };
        let extra = bit_len(den).saturating_sub(bit_len(&diff)) + 2;
        let w = self.width + extra;
        let ln2 = if extra == 0 { self.ln2.clone() } else { Self::ln2_at(w) };

        // num/den = m * 2^e with m in [1/sqrt 2, sqrt 2)
        let mut e = bit_len(num) as isize - bit_len(den) as isize;
        let shift = w as isize - e;
        let mut m = if shift >= 0 {
            (num << shift as usize) / den
        } else {
            num / (den << (-shift) as usize)
        };
        let one = UBig::ONE << w;
        if (&m * &m) << 1 < (&one * &one) {
            m <<= 1;
            e -= 1;
        } else if (&m * &m) >= (&one * &one) << 1 {
            m >>= 1;
            e += 1;
        }
        let m = IBig::from(m);
        let one = IBig::from(one);
        let s = ((&m - &one) << w) / (&m + &one);
        let fixed = (atanh_fixed(&s, w) << 1) + ln2 * IBig::from(e);
        Float::from_parts(fixed, -(w as isize)).with_precision(self.precision).value()
    }

    pub fn ln_rational(&self, x: &Rational) -> Float {
        let num = x.numerator().unsigned_abs();
        assert!(x > &Rational::ZERO, "logarithm of non-positive value");
        self.ln_ratio(&num, x.denominator())
    }

    pub fn ln_float(&self, x: &Float) -> Float {
        let repr = x.repr();
        assert!(repr.significand() > &IBig::ZERO, "logarithm of non-positive value");
        let sig = repr.significand().unsigned_abs();
        let exp = repr.exponent();
        if exp >= 0 {
            self.ln_ratio(&(sig << exp as usize), &UBig::ONE)
        } else {
            self.ln_ratio(&sig, &(UBig::ONE << (-exp) as usize))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_err(a: &Float, b: &Float) -> f64 {
        let d = float_to_rational(&(a.clone() - b.clone()));
        let m = float_to_rational(b);
        if m == Rational::ZERO {
            return float_to_rational(a).to_f64().value().abs();
        }
        (d / m).to_f64().value().abs()
    }

    #[test]
    fn ln_matches_dashu() {
        let ctx = LnContext::new(256);
        let cases: [(u64, u64); 9] =
            [(2, 1), (3, 1), (1, 3), (10, 7), (1_000_001, 1_000_000), (999, 1000), (1, 1 << 40), (65535, 2), (7, 5)];
        for (n, d) in cases {
            let got = ctx.ln_ratio(&UBig::from(n), &UBig::from(d));
            let x = float_from_rational(&Rational::from_parts(IBig::from(n), UBig::from(d)), 400);
            let want = x.ln().with_precision(256).value();
            assert!(rel_err(&got, &want) < 1e-70, "ln({n}/{d}) off");
        }
    }

    #[test]
    fn ln_near_one_keeps_relative_accuracy() {
        let ctx = LnContext::new(128);
        let big = UBig::ONE << 300;
        let got = ctx.ln_ratio(&(&big + UBig::ONE), &big);
        // ln(1 + x) = x - x^2/2 + ..., x = 2^-300
        let want = Float::from_parts(IBig::ONE, -300).with_precision(128).value();
        assert!(rel_err(&got, &want) < 1e-30);
    }

    #[test]
    fn ln_of_float_and_one() {
        let ctx = LnContext::new(128);
        assert_eq!(ctx.ln_ratio(&UBig::from(5u8), &UBig::from(5u8)), Float::ZERO);
        let x = Float::from_parts(IBig::from(3), -5).with_precision(128).value();
        let got = ctx.ln_float(&x);
        let want = ctx.ln_ratio(&UBig::from(3u8), &UBig::from(32u8));
        assert_eq!(got, want);
    }

    #[test]
    fn rational_round_trip() {
        let r = Rational::from_parts(IBig::from(3), UBig::from(8u8));
        assert_eq!(float_to_rational(&float_from_rational(&r, 64)), r);
    }
}
