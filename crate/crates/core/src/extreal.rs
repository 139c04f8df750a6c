//! Extended reals for divergence values.

use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, Neg, Sub};

use alloc::string::{String, ToString};
use dashu_base::Abs;

use crate::float::{float_from_rational, float_to_rational, Float};
use crate::numsys::Rational;

/// A finite exact or floating value, or an infinity.
///
/// Ordering is total: exact and float values compare by their exact value,
/// which every binary float has.
#[derive(Debug, Clone)]
pub enum ExtReal {
    NegInfinity,
    Exact(Rational),
    Float(Float),
    Infinity,
}

impl ExtReal {
    pub fn zero() -> Self {
        ExtReal::Exact(Rational::ZERO)
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtReal::Exact(_) | ExtReal::Float(_))
    }

    pub fn is_infinite(&self) -> bool {
        !self.is_finite()
    }

    /// Exact value, if finite.
    pub fn to_rational(&self) -> Option<Rational> {
        match self {
            ExtReal::Exact(r) => Some(r.clone()),
            ExtReal::Float(f) => Some(float_to_rational(f)),
            _ => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ExtReal::NegInfinity => f64::NEG_INFINITY,
            ExtReal::Infinity => f64::INFINITY,
            ExtReal::Exact(r) => r.to_f64().value(),
            ExtReal::Float(f) => f.to_f64().value(),
        }
    }

    /// Multiply by a non-negative rational. `0 * inf` is taken as 0.
    pub fn scale(&self, r: &Rational) -> Self {
        if r.is_zero() {
            return ExtReal::zero();
        }
        match self {
            ExtReal::Exact(x) => ExtReal::Exact(x * r),
            ExtReal::Float(x) => {
                let p = x.precision().max(64);
                ExtReal::Float(x * float_from_rational(r, p))
            }
            other => other.clone(),
        }
    }

    /// Three-way comparison that treats finite values within
    /// `2^-(bits - 16) * max(1, |a|, |b|)` as equal whenever a float is
    /// involved. Exact pairs compare exactly.
    pub fn cmp_tol(&self, other: &Self, bits: usize) -> Ordering {
        let (a, b) = match (self, other) {
            (ExtReal::Float(a), ExtReal::Float(b)) => (a.clone(), b.clone()),
            (ExtReal::Float(a), ExtReal::Exact(b)) => (a.clone(), float_from_rational(b, bits + 16)),
            (ExtReal::Exact(a), ExtReal::Float(b)) => (float_from_rational(a, bits + 16), b.clone()),
            _ => return self.cmp(other),
        };
        let exact = a.cmp(&b);
        if exact == Ordering::Equal {
            return exact;
        }
        let wide = a.precision().max(b.precision()) + 2;
        let a = a.with_precision(wide).value();
        let b = b.with_precision(wide).value();
        let diff = (&a - &b).abs();
        let scale = [Float::ONE, a.abs(), b.abs()].into_iter().max().unwrap();
        let repr = scale.repr();
        let tol = Float::from_parts(repr.significand().clone(), repr.exponent() - bits.saturating_sub(16) as isize);
        if diff <= tol {
            Ordering::Equal
        } else {
            exact
        }
    }
}

impl From<Rational> for ExtReal {
    fn from(r: Rational) -> Self {
        ExtReal::Exact(r)
    }
}

impl From<Float> for ExtReal {
    fn from(f: Float) -> Self {
        ExtReal::Float(f)
    }
}

impl PartialEq for ExtReal {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for ExtReal {}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtReal {
    fn cmp(&self, other: &Self) -> Ordering {
        use ExtReal::*;
        match (self, other) {
            (NegInfinity, NegInfinity) | (Infinity, Infinity) => Ordering::Equal,
            (NegInfinity, _) | (_, Infinity) => Ordering::Less,
            (_, NegInfinity) | (Infinity, _) => Ordering::Greater,
            (Exact(a), Exact(b)) => a.cmp(b),
            (Float(a), Float(b)) => a.cmp(b),
            (Exact(a), Float(b)) => a.cmp(&float_to_rational(b)),
            (Float(a), Exact(b)) => float_to_rational(a).cmp(b),
        }
    }
}

impl Add for &ExtReal {
    type Output = ExtReal;

    /// `+inf` absorbs everything, including `-inf`.
    fn add(self, rhs: &ExtReal) -> ExtReal {
        use ExtReal::*;
        match (self, rhs) {
            (Infinity, _) | (_, Infinity) => Infinity,
            (NegInfinity, _) | (_, NegInfinity) => NegInfinity,
            (Exact(a), Exact(b)) => Exact(a + b),
            (Float(a), Float(b)) => Float(a + b),
            (Exact(a), Float(b)) | (Float(b), Exact(a)) => {
                Float(float_from_rational(a, b.precision().max(64)) + b)
            }
        }
    }
}

impl Add for ExtReal {
    type Output = ExtReal;
    fn add(self, rhs: ExtReal) -> ExtReal {
        &self + &rhs
    }
}

impl Neg for &ExtReal {
    type Output = ExtReal;
    fn neg(self) -> ExtReal {
        use ExtReal::*;
        match self {
            Infinity => NegInfinity,
            NegInfinity => Infinity,
            Exact(a) => Exact(-a.clone()),
            Float(a) => Float(-a.clone()),
        }
    }
}

impl Neg for ExtReal {
    type Output = ExtReal;
    fn neg(self) -> ExtReal {
        -&self
    }
}

impl Sub for &ExtReal {
    type Output = ExtReal;

    /// `inf - inf` is `+inf`, matching the out-of-range cost convention.
    fn sub(self, rhs: &ExtReal) -> ExtReal {
        use ExtReal::*;
        match (self, rhs) {
            (Infinity, _) => Infinity,
            (_, NegInfinity) => Infinity,
            _ => self + &(-rhs),
        }
    }
}

impl Sub for ExtReal {
    type Output = ExtReal;
    fn sub(self, rhs: ExtReal) -> ExtReal {
        &self - &rhs
    }
}

impl fmt::Display for ExtReal {
    /// Exact values print as `a/b`, floats in decimal scientific notation.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInfinity => f.write_str("-inf"),
            ExtReal::Infinity => f.write_str("inf"),
            ExtReal::Exact(r) => write!(f, "{}", r),
            ExtReal::Float(x) => f.write_str(&float_to_decimal(x, 40)),
        }
    }
}

/// Decimal scientific notation with `digits` significant digits.
pub fn float_to_decimal(x: &Float, digits: usize) -> String {
    if x.repr().significand().is_zero() {
        return "0".to_string();
    }
    let dec = x.to_decimal().value().with_precision(digits).value();
    let repr = dec.repr();
    let sig = repr.significand().to_string();
    let (sign, digits_str) = match sig.strip_prefix('-') {
        Some(rest) => ("-", rest.to_string()),
        None => ("", sig),
    };
    let trimmed = digits_str.trim_end_matches('0');
    let dropped = digits_str.len() - trimmed.len();
    let exp10 = repr.exponent() + dropped as isize + trimmed.len() as isize - 1;
    let (head, tail) = trimmed.split_at(1);
    if tail.is_empty() {
        alloc::format!("{sign}{head}e{exp10}")
    } else {
        alloc::format!("{sign}{head}.{tail}e{exp10}")
    }
}
