//! Exact probability mass functions for test targets.

use dashu_int::{IBig, UBig};
use optsample_core::Rational;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DistError {
    #[error("success probability must lie in [0, 1]")]
    Probability,
    #[error("need successes <= population and draws <= population")]
    Hypergeometric,
}

fn choose(n: u64, k: u64) -> UBig {
    let mut acc = UBig::ONE;
    for i in 0..k {
        acc = acc * UBig::from(n - i) / UBig::from(i + 1);
    }
    acc
}

/// `P(X = i)` for `i = 0..=n`, `X ~ Binomial(n, p)`.
pub fn binomial(n: u64, p: &Rational) -> Result<Vec<Rational>, DistError> {
    if p < &Rational::ZERO || p > &Rational::ONE {
        return Err(DistError::Probability);
    }
    let q = Rational::ONE - p;
    let mut out = Vec::with_capacity(n as usize + 1);
    for i in 0..=n {
        let c = Rational::from(choose(n, i));
        out.push(c * pow(p, i) * pow(&q, n - i));
    }
    Ok(out)
}

/// `P(X = i)` for `i = 0..=draws`, drawing without replacement from
/// `population` items of which `successes` are marked.
pub fn hypergeometric(population: u64, successes: u64, draws: u64) -> Result<Vec<Rational>, DistError> {
    if successes > population || draws > population {
        return Err(DistError::Hypergeometric);
    }
    let total = choose(population, draws);
    let out = (0..=draws)
        .map(|i| {
            if i > successes || draws - i > population - successes {
                return Rational::ZERO;
            }
            let ways = choose(successes, i) * choose(population - successes, draws - i);
            Rational::from_parts(IBig::from(ways), total.clone())
        })
        .collect();
    Ok(out)
}

fn pow(x: &Rational, e: u64) -> Rational {
    (0..e).fold(Rational::ONE, |acc, _| acc * x)
}
