#![allow(dead_code)]

use dashu_int::{IBig, UBig};
use optsample_core::{Assignment, GeneratorKind, PrecisionSpec, Rational};
use proptest::prelude::*;

pub fn r(n: i64, d: u64) -> Rational {
    Rational::from_parts(IBig::from(n), UBig::from(d))
}

pub fn ubig(x: u64) -> UBig {
    UBig::from(x)
}

/// Normalizes non-negative integer weights with a positive sum.
pub fn normalize(w: &[u64]) -> Vec<Rational> {
    let total: u64 = w.iter().sum();
    w.iter().map(|&x| r(x as i64, total)).collect()
}

pub fn to_f64(x: &Rational) -> f64 {
    x.to_f64().value()
}

pub fn all_kinds() -> Vec<GeneratorKind> {
    vec![
        GeneratorKind::TotalVariation,
        GeneratorKind::Hellinger,
        GeneratorKind::PearsonChiSquared,
        GeneratorKind::TriangularDiscrimination,
        GeneratorKind::ReverseKL,
        GeneratorKind::ForwardKL,
        GeneratorKind::alpha(r(1, 2)).unwrap(),
    ]
}

/// Random target: `n` weights in `0..=max`, at least one positive.
pub fn target(n: std::ops::RangeInclusive<usize>, max: u64) -> impl Strategy<Value = Vec<Rational>> {
    n.prop_flat_map(move |n| proptest::collection::vec(0..=max, n))
        .prop_filter("positive total", |w| w.iter().any(|&x| x > 0))
        .prop_map(|w| normalize(&w))
}

/// Uniformly random composition of `z` into `n` parts.
pub fn composition(z: u64, cuts: &mut [u64]) -> Vec<UBig> {
    cuts.sort_unstable();
    let mut prev = 0;
    let mut out = Vec::with_capacity(cuts.len() + 1);
    for &c in cuts.iter() {
        out.push(ubig(c - prev));
        prev = c;
    }
    out.push(ubig(z - prev));
    out
}

pub fn assignment(m: &[u64]) -> Assignment {
    let z: u64 = m.iter().sum();
    Assignment::new(m.iter().map(|&x| ubig(x)).collect(), ubig(z)).unwrap()
}

/// Every `M` with `n` parts summing to `z`, lexicographically.
pub fn compositions(n: usize, z: u64) -> Vec<Vec<u64>> {
    if n == 1 {
        return vec![vec![z]];
    }
    let mut out = Vec::new();
    for first in 0..=z {
        for mut rest in compositions(n - 1, z - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// `(M, spec)` with `k <= max_k`, `n <= max_n`, uniformly cut compositions.
pub fn instance(max_k: u32, max_n: usize) -> impl Strategy<Value = (Assignment, PrecisionSpec)> {
    (1u32..=max_k, 2usize..=max_n)
        .prop_flat_map(|(k, n)| (Just(k), 0u32..=k, Just(n)))
        .prop_flat_map(|(k, l, n)| {
            let spec = PrecisionSpec::new(k, l).unwrap();
            let z: u64 = (&spec.z()).try_into().unwrap();
            (Just(spec), proptest::collection::vec(0..=z, n - 1)).prop_map(move |(spec, mut cuts)| {
                let m = composition(z, &mut cuts);
                (Assignment::new(m, spec.z()).unwrap(), spec)
            })
        })
}
