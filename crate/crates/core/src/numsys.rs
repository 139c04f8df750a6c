//! Exact rationals and the `N_kl` number systems.
//!
//! A value in `N_kl` is a binary expansion with an `l`-bit prefix followed by a
//! `(k - l)`-bit suffix that repeats forever. Every such value is an integer
//! multiple of `1 / Z_kl`, where `Z_kl = 2^k - 2^l` for `l < k` and `Z_kk = 2^k`.

use alloc::vec::Vec;
use core::fmt;

use dashu_base::{BitTest, Gcd};
use dashu_int::fast_div::ConstDivisor;
use dashu_int::{IBig, UBig};
use dashu_ratio::RBig;
use thiserror::Error;

/// Exact arbitrary-precision fraction, always stored in lowest terms.
pub type Rational = RBig;

/// Default trial-division bound for [`multiplicative_order`].
pub const DEFAULT_ORDER_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumSysError {
    #[error("invalid precision: l = {l} exceeds k = {k}")]
    InvalidPrecision { k: u32, l: u32 },
    #[error("precision k must be at least 1")]
    ZeroPrecision,
    #[error("numerator {numerator} out of range for Z = {z}")]
    OutOfRange { numerator: UBig, z: UBig },
    #[error("order computation exceeded budget (trial division bound {budget}); unfactored cofactor {remaining}")]
    BudgetExceeded {
        budget: u64,
        /// Prime powers split off before giving up.
        factored: Vec<(UBig, u32)>,
        remaining: UBig,
    },
    #[error("base and modulus are not coprime")]
    NotCoprime,
    #[error("modulus must be at least 2")]
    ModulusTooSmall,
    #[error("distribution is degenerate: outcome {outcome} has probability 1")]
    Degenerate { outcome: usize },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(&'static str),
}

/// A `(k, l)` pair selecting the number system `N_kl`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PrecisionSpec {
    k: u32,
    l: u32,
}

impl PrecisionSpec {
    pub fn new(k: u32, l: u32) -> Result<Self, NumSysError> {
        if k == 0 {
            return Err(NumSysError::ZeroPrecision);
        }
        if l > k {
            return Err(NumSysError::InvalidPrecision { k, l });
        }
        Ok(Self { k, l })
    }

    /// The dyadic system `N_kk` with denominator `2^k`.
    pub fn dyadic(k: u32) -> Result<Self, NumSysError> {
        Self::new(k, k)
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn is_dyadic(&self) -> bool {
        self.l == self.k
    }

    /// Length of the repeating suffix.
    pub fn period(&self) -> u32 {
        self.k - self.l
    }

    pub fn z(&self) -> UBig {
        z_kl(*self)
    }
}

impl fmt::Display for PrecisionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.k, self.l)
    }
}

/// `Z_kl = 2^k - 2^l * [l < k]`.
pub fn z_kl(spec: PrecisionSpec) -> UBig {
    let full = UBig::ONE << spec.k as usize;
    if spec.l < spec.k {
        full - (UBig::ONE << spec.l as usize)
    } else {
        full
    }
}

/// Prefix and repeating suffix bits, MSB first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryExpansion {
    pub prefix: Vec<bool>,
    pub suffix: Vec<bool>,
}

impl BinaryExpansion {
    pub fn spec(&self) -> Result<PrecisionSpec, NumSysError> {
        let k = u32::try_from(self.prefix.len() + self.suffix.len())
            .map_err(|_| NumSysError::InvalidDistribution("expansion too long"))?;
        PrecisionSpec::new(k, self.prefix.len() as u32)
    }

    /// All `k` bits, prefix first.
    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        self.prefix.iter().chain(self.suffix.iter()).copied()
    }

    /// The concise form never ends in an infinitely repeating run of ones.
    pub fn is_concise(&self) -> bool {
        self.suffix.is_empty() || !self.suffix.iter().all(|&b| b)
    }
}

fn bits_msb_first(value: &UBig, width: u32) -> Vec<bool> {
    (0..width as usize).rev().map(|i| value.bit(i)).collect()
}

fn value_of_bits(bits: &[bool]) -> UBig {
    bits.iter().fold(UBig::ZERO, |acc, &b| {
        let acc = acc << 1;
        if b {
            acc + UBig::ONE
        } else {
            acc
        }
    })
}

/// Encode `M / Z_kl` as a concise expansion in `N_kl`.
///
/// Requires `M < Z_kl`; a numerator equal to `Z_kl` is the degenerate
/// probability-one case and has no concise expansion here.
pub fn encode_numsys(numerator: &UBig, spec: PrecisionSpec) -> Result<BinaryExpansion, NumSysError> {
    let z = spec.z();
    if numerator >= &z {
        return Err(NumSysError::OutOfRange { numerator: numerator.clone(), z });
    }
    let (k, l) = (spec.k, spec.l);
    let (x, y) = if l == k {
        (numerator.clone(), UBig::ZERO)
    } else if l == 0 {
        (UBig::ZERO, numerator.clone())
    } else {
        let period = (UBig::ONE << (k - l) as usize) - UBig::ONE;
        let x = numerator / &period;
        let y = numerator - &period * &x;
        (x, y)
    };
    Ok(BinaryExpansion {
        prefix: bits_msb_first(&x, l),
        suffix: bits_msb_first(&y, k - l),
    })
}

/// Numerator `M` such that the expansion equals `M / Z_kl`.
pub fn decode_numerator(exp: &BinaryExpansion) -> Result<(UBig, PrecisionSpec), NumSysError> {
    let spec = exp.spec()?;
    let x = value_of_bits(&exp.prefix);
    let y = value_of_bits(&exp.suffix);
    let m = if spec.is_dyadic() {
        x
    } else {
        let period = (UBig::ONE << spec.period() as usize) - UBig::ONE;
        period * x + y
    };
    Ok((m, spec))
}

pub fn decode_numsys(exp: &BinaryExpansion) -> Result<Rational, NumSysError> {
    let (m, spec) = decode_numerator(exp)?;
    Ok(Rational::from_parts(IBig::from(m), spec.z()))
}

fn modpow(base: &UBig, exp: &UBig, ring: &ConstDivisor) -> UBig {
    ring.reduce(base.clone()).pow(exp).residue()
}

/// Prime-power factorization by trial division up to `budget`.
fn factor(n: &UBig, budget: u64) -> Result<Vec<(UBig, u32)>, NumSysError> {
    let mut rest = n.clone();
    let mut out = Vec::new();
    let mut d: u64 = 2;
    while d <= budget && rest > UBig::ONE {
        let dd = UBig::from(d);
        if &dd * &dd > rest {
            break;
        }
        let mut e = 0u32;
        while (&rest % &dd).is_zero() {
            rest /= &dd;
            e += 1;
        }
        if e > 0 {
            out.push((dd, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if rest > UBig::ONE {
        // every factor below d has been removed, so a cofactor below d^2 is prime
        let dd = UBig::from(d);
        if &dd * &dd > rest {
            out.push((rest, 1));
        } else {
            return Err(NumSysError::BudgetExceeded { budget, factored: out, remaining: rest });
        }
    }
    Ok(out)
}

fn order_mod_prime(base: &UBig, p: &UBig, budget: u64) -> Result<UBig, NumSysError> {
    let ring = ConstDivisor::new(p.clone());
    let mut order = p - UBig::ONE;
    for (q, _) in factor(&order.clone(), budget)? {
        while (&order % &q).is_zero() {
            let candidate = &order / &q;
            if modpow(base, &candidate, &ring) == UBig::ONE {
                order = candidate;
            } else {
                break;
            }
        }
    }
    Ok(order)
}

/// Smallest `e >= 1` with `base^e = 1 (mod modulus)`.
///
/// Works prime power by prime power: the order modulo `p` comes from the
/// factorization of `p - 1`, and each step from `p^j` to `p^(j+1)` multiplies
/// it by either 1 or `p`.
pub fn multiplicative_order(base: &UBig, modulus: &UBig, budget: u64) -> Result<UBig, NumSysError> {
    if modulus < &UBig::from(2u8) {
        return Err(NumSysError::ModulusTooSmall);
    }
    if base.gcd(modulus) != UBig::ONE {
        return Err(NumSysError::NotCoprime);
    }
    let mut total = UBig::ONE;
    for (p, e) in factor(modulus, budget)? {
        let mut order = order_mod_prime(base, &p, budget)?;
        let mut pj = p.clone();
        for _ in 1..e {
            pj *= &p;
            let ring = ConstDivisor::new(pj.clone());
            if modpow(base, &order, &ring) != UBig::ONE {
                order *= &p;
            }
        }
        let g = (&total).gcd(&order);
        total = &total / &g * &order;
    }
    Ok(total)
}

/// Precision `(k, l)` of the smallest number system holding a distribution
/// exactly. Both entries may be astronomically large, hence big integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactPrecision {
    pub k: UBig,
    pub l: UBig,
}

impl ExactPrecision {
    /// Machine-sized spec, if `k` fits.
    pub fn spec(&self) -> Option<PrecisionSpec> {
        let k = u32::try_from(&self.k).ok()?;
        let l = u32::try_from(&self.l).ok()?;
        PrecisionSpec::new(k, l).ok()
    }

    /// `Z_kl`, only when `k` is at most `max_bits`.
    pub fn z(&self, max_bits: u32) -> Option<UBig> {
        self.spec().filter(|s| s.k() <= max_bits).map(|s| s.z())
    }
}

/// Least common multiple of the reduced denominators.
pub fn common_denominator(p: &[Rational]) -> UBig {
    p.iter().fold(UBig::ONE, |acc, x| {
        let d = x.denominator();
        let g = (&acc).gcd(d);
        &acc / &g * d
    })
}

/// Checks that `p` is a probability vector summing exactly to one.
pub fn validate_distribution(p: &[Rational]) -> Result<(), NumSysError> {
    if p.is_empty() {
        return Err(NumSysError::InvalidDistribution("empty distribution"));
    }
    if p.iter().any(|x| x < &Rational::ZERO) {
        return Err(NumSysError::InvalidDistribution("negative probability"));
    }
    let total = p.iter().fold(Rational::ZERO, |acc, x| acc + x);
    if total != Rational::ONE {
        return Err(NumSysError::InvalidDistribution("probabilities do not sum to 1"));
    }
    Ok(())
}

/// Smallest `(k, l)` such that every `p_i` is a multiple of `1 / Z_kl`.
///
/// With `d = d' 2^t` the common denominator (`d'` odd), the answer is the
/// dyadic `(max(t, 1), max(t, 1))` when `d' = 1`, otherwise
/// `(t + ord_{d'}(2), t)`. Zero entries impose no constraint.
pub fn minimal_exact_precision(p: &[Rational], budget: u64) -> Result<ExactPrecision, NumSysError> {
    validate_distribution(p)?;
    if let Some(i) = p.iter().position(|x| x == &Rational::ONE) {
        return Err(NumSysError::Degenerate { outcome: i });
    }
    let positive: Vec<Rational> = p.iter().filter(|x| !x.is_zero()).cloned().collect();
    let d = common_denominator(&positive);
    let t = d.trailing_zeros().unwrap_or(0);
    let odd = &d >> t;
    if odd == UBig::ONE {
        let k = UBig::from(t.max(1));
        return Ok(ExactPrecision { k: k.clone(), l: k });
    }
    let order = multiplicative_order(&UBig::from(2u8), &odd, budget)?;
    Ok(ExactPrecision { k: UBig::from(t) + order, l: UBig::from(t) })
}

/// Parses `a`, `a/b`, or a plain decimal such as `0.125` into an exact rational.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if text.is_empty() {
        return None;
    }
    if let Some((whole, frac)) = text.split_once('.') {
        if text.contains('/') || frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let negative = whole.starts_with('-');
        let digits = whole.trim_start_matches(['-', '+']);
        if !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let mut joined = alloc::string::String::from(if digits.is_empty() { "0" } else { digits });
        joined.push_str(frac);
        let num: UBig = joined.parse().ok()?;
        let den = UBig::from(10u8).pow(frac.len());
        let value = Rational::from_parts(IBig::from(num), den);
        return Some(if negative { -value } else { value });
    }
    let (num, den) = text.split_once('/').unwrap_or((text, "1"));
    let num: IBig = num.trim().parse().ok()?;
    let den: UBig = den.trim().parse().ok()?;
    if den.is_zero() {
        return None;
    }
    Some(Rational::from_parts(num, den))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn r(n: i64, d: u64) -> Rational {
        Rational::from_parts(IBig::from(n), UBig::from(d))
    }

    fn bits(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    fn spec(k: u32, l: u32) -> PrecisionSpec {
        PrecisionSpec::new(k, l).unwrap()
    }

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rational("3/10"), Some(r(3, 10)));
        assert_eq!(parse_rational(" 6/20 "), Some(r(3, 10)));
        assert_eq!(parse_rational("0.125"), Some(r(1, 8)));
        assert_eq!(parse_rational("-1.5"), Some(r(-3, 2)));
        assert_eq!(parse_rational("7"), Some(r(7, 1)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
        assert_eq!(parse_rational("1."), None);
    }

    #[test]
    fn z_values() {
        assert_eq!(z_kl(spec(4, 4)), UBig::from(16u8));
        assert_eq!(z_kl(spec(5, 1)), UBig::from(30u8));
        assert_eq!(z_kl(spec(16, 0)), UBig::from(65535u32));
    }

    #[test]
    fn invalid_specs() {
        assert_eq!(PrecisionSpec::new(3, 4), Err(NumSysError::InvalidPrecision { k: 3, l: 4 }));
        assert_eq!(PrecisionSpec::new(0, 0), Err(NumSysError::ZeroPrecision));
    }

    #[test]
    fn encode_examples() {
        let e = encode_numsys(&UBig::from(9u8), spec(5, 1)).unwrap();
        assert_eq!((e.prefix, e.suffix), (bits("0"), bits("1001")));
        let e = encode_numsys(&UBig::from(21u8), spec(5, 1)).unwrap();
        assert_eq!((e.prefix, e.suffix), (bits("1"), bits("0110")));
        let e = encode_numsys(&UBig::from(2u8), spec(2, 2)).unwrap();
        assert_eq!((e.prefix, e.suffix), (bits("10"), vec![]));
    }

    #[test]
    fn encode_rejects_out_of_range() {
        assert!(matches!(
            encode_numsys(&UBig::from(30u8), spec(5, 1)),
            Err(NumSysError::OutOfRange { .. })
        ));
        assert!(encode_numsys(&UBig::from(4u8), spec(2, 2)).is_err());
    }

    #[test]
    fn decode_examples() {
        let e = BinaryExpansion { prefix: bits("0"), suffix: bits("1001") };
        assert_eq!(decode_numsys(&e).unwrap(), r(3, 10));
        let e = BinaryExpansion { prefix: vec![], suffix: bits("0000") };
        assert_eq!(decode_numsys(&e).unwrap(), Rational::ZERO);
        let e = BinaryExpansion { prefix: bits("10"), suffix: vec![] };
        assert_eq!(decode_numsys(&e).unwrap(), r(1, 2));
    }

    #[test]
    fn order_brute_force_agreement() {
        // brute force: smallest e with 2^e = 1 mod m
        for m in (3u64..400).step_by(2) {
            let mut acc = 2 % m;
            let mut e = 1u64;
            while acc != 1 {
                acc = acc * 2 % m;
                e += 1;
            }
            let got = multiplicative_order(&UBig::from(2u8), &UBig::from(m), 1000).unwrap();
            assert_eq!(got, UBig::from(e), "modulus {m}");
        }
        assert_eq!(multiplicative_order(&UBig::from(2u8), &UBig::from(5u8), 10).unwrap(), UBig::from(4u8));
        assert_eq!(multiplicative_order(&UBig::from(2u8), &UBig::from(3u8), 10).unwrap(), UBig::from(2u8));
        assert_eq!(multiplicative_order(&UBig::from(2u8), &UBig::from(7u8), 10).unwrap(), UBig::from(3u8));
    }

    #[test]
    fn order_errors() {
        assert_eq!(
            multiplicative_order(&UBig::from(2u8), &UBig::from(6u8), 10),
            Err(NumSysError::NotCoprime)
        );
        assert_eq!(
            multiplicative_order(&UBig::from(2u8), &UBig::ONE, 10),
            Err(NumSysError::ModulusTooSmall)
        );
        // 1000003 * 1000033 has no factor below the bound 100
        let m = UBig::from(1_000_003u64) * UBig::from(1_000_033u64);
        match multiplicative_order(&UBig::from(2u8), &m, 100) {
            Err(NumSysError::BudgetExceeded { remaining, .. }) => assert_eq!(remaining, m),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn order_prime_power_lifting() {
        // ord_{5^e}(2) = 4 * 5^(e-1) since 2 is a primitive root mod 25
        let m = UBig::from(5u8).pow(150);
        let got = multiplicative_order(&UBig::from(2u8), &m, 1000).unwrap();
        assert_eq!(got, UBig::from(4u8) * UBig::from(5u8).pow(149));
    }

    #[test]
    fn minimal_precision_examples() {
        let got = minimal_exact_precision(&[r(3, 10), r(7, 10)], DEFAULT_ORDER_BUDGET).unwrap();
        assert_eq!(got.spec(), Some(spec(5, 1)));
        let got = minimal_exact_precision(&[r(1, 2), r(1, 4), r(1, 4)], DEFAULT_ORDER_BUDGET).unwrap();
        assert_eq!(got.spec(), Some(spec(2, 2)));
        let got = minimal_exact_precision(&[r(1, 3), r(2, 3)], DEFAULT_ORDER_BUDGET).unwrap();
        assert_eq!(got.spec(), Some(spec(2, 0)));
    }

    #[test]
    fn minimal_precision_ignores_zeros_and_flags_degenerate() {
        let got = minimal_exact_precision(&[r(0, 1), r(1, 2), r(1, 2)], DEFAULT_ORDER_BUDGET).unwrap();
        assert_eq!(got.spec(), Some(spec(1, 1)));
        assert_eq!(
            minimal_exact_precision(&[r(0, 1), r(1, 1)], DEFAULT_ORDER_BUDGET),
            Err(NumSysError::Degenerate { outcome: 1 })
        );
        assert!(minimal_exact_precision(&[r(1, 2)], DEFAULT_ORDER_BUDGET).is_err());
    }

    #[test]
    fn minimal_precision_is_minimal_by_search() {
        // exhaustive check over k <= 12: no smaller (k, l) has Z_kl divisible by d
        for d in 2u64..=60 {
            let p = [r(1, d), r(d as i64 - 1, d)];
            let got = minimal_exact_precision(&p, DEFAULT_ORDER_BUDGET).unwrap();
            let mut best = None;
            'outer: for k in 1u32..=64 {
                for l in 0..=k {
                    if (z_kl(spec(k, l)) % UBig::from(d)).is_zero() {
                        best = Some(k);
                        break 'outer;
                    }
                }
            }
            assert_eq!(got.spec().map(|s| s.k()), best, "d = {d}");
        }
    }
}
