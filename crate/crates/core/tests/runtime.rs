mod common;

use common::*;
use optsample_core::ddg::{analyze, build_encoding, build_matrix};
use optsample_core::runtime::sample_counts;
use optsample_core::{
    enumerate_outcomes, sample_encoding, sample_matrix, BitSource, FixedBitsSource, NeedMoreBits, PrecisionSpec,
    Rational, SplitMix64Source,
};
use proptest::prelude::*;

fn splitmix_words(seed: u64, count: usize) -> Vec<u64> {
    let mut x = seed;
    (0..count)
        .map(|_| {
            x = x.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = x;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            z ^ (z >> 31)
        })
        .collect()
}

/// Counts bits on its own, independent of the wrapped source's counter.
struct Tally<S> {
    inner: S,
    seen: u64,
}

impl<S: BitSource> BitSource for Tally<S> {
    fn next_bit(&mut self) -> Result<bool, NeedMoreBits> {
        self.seen += 1;
        self.inner.next_bit()
    }

    fn bits_consumed(&self) -> u64 {
        self.inner.bits_consumed()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn matrix_and_encoding_agree((m, spec) in instance(10, 6)) {
        prop_assume!(m.numerators().iter().all(|x| x != m.denominator()));
        let p = build_matrix(&m, spec).unwrap();
        let enc = build_encoding(&m, spec).unwrap();
        for len in 0..=12u32 {
            for word in 0..1u64 << len {
                let mut a = FixedBitsSource::from_word(word, len);
                let mut b = FixedBitsSource::from_word(word, len);
                let x = sample_encoding(&enc, &mut a);
                let y = sample_matrix(&p, &mut b);
                prop_assert_eq!(x, y);
                prop_assert_eq!(a.bits_consumed(), b.bits_consumed());
            }
        }
    }

    #[test]
    fn enumeration_converges((m, spec) in instance(10, 6), extra in 0u32..6) {
        let enc = build_encoding(&m, spec).unwrap();
        let exact = m.probabilities();
        let n = m.len();
        let depth = spec.k() + extra;
        let e = enumerate_outcomes(n, depth, |s| sample_encoding(&enc, s)).unwrap();
        let mut deficit = Rational::ZERO;
        for (got, want) in e.masses.iter().zip(&exact) {
            prop_assert!(got <= want);
            deficit += want - got;
        }
        prop_assert_eq!(&deficit, &e.bottom);
        let bound = r(n as i64, 1) * r(1 << spec.l(), 1u64 << depth);
        prop_assert!(e.bottom <= bound);
        if spec.is_dyadic() {
            prop_assert_eq!(&e.masses, &exact);
        }
        prop_assert!(e.expected_bits_truncated <= analyze(&enc).unwrap().expected_bits);
    }
}

#[test]
fn splitmix_matches_reference() {
    for seed in [0u64, 1, 42, u64::MAX] {
        let want = splitmix_words(seed, 64);
        let mut src = SplitMix64Source::new(seed);
        let got: Vec<u64> = (0..64).map(|_| src.next_word()).collect();
        assert_eq!(got, want);

        let mut src = SplitMix64Source::new(seed);
        for w in &want[..4] {
            let mut word = 0u64;
            for _ in 0..64 {
                word = word << 1 | src.next_bit().unwrap() as u64;
            }
            assert_eq!(word, *w);
        }
        assert_eq!(src.bits_consumed(), 256);
    }
    assert_eq!(splitmix_words(0, 1)[0], 0xE220A8397B1DCDAF);
}

#[test]
fn consumption_matches_expected_bits() {
    let cases = [
        (vec![9u64, 21], PrecisionSpec::new(5, 1).unwrap()),
        (vec![2, 1, 1], PrecisionSpec::dyadic(2).unwrap()),
        (vec![100, 300, 216, 400], PrecisionSpec::new(10, 3).unwrap()),
    ];
    for (m, spec) in cases {
        let a = optsample_core::Assignment::new(m.iter().map(|&x| ubig(x)).collect(), spec.z()).unwrap();
        let enc = build_encoding(&a, spec).unwrap();
        let want = to_f64(&analyze(&enc).unwrap().expected_bits);
        let mut src = Tally { inner: SplitMix64Source::new(2024), seen: 0 };
        let num = 100_000u64;
        let (mut sum, mut sq) = (0f64, 0f64);
        for _ in 0..num {
            let before = src.bits_consumed();
            sample_encoding(&enc, &mut src).unwrap();
            let used = (src.bits_consumed() - before) as f64;
            sum += used;
            sq += used * used;
        }
        assert_eq!(src.seen, src.bits_consumed());
        assert_eq!(src.bits_consumed() as f64, sum);
        let mean = sum / num as f64;
        let sd = (sq / num as f64 - mean * mean).sqrt();
        let tol = 3.0 * sd / (num as f64).sqrt();
        assert!((mean - want).abs() <= tol, "mean {mean}, expected {want}, tol {tol}");
    }
}

#[test]
fn counts_are_reproducible() {
    let spec = PrecisionSpec::new(8, 2).unwrap();
    let a = optsample_core::Assignment::new(vec![ubig(50), ubig(100), ubig(102)], spec.z()).unwrap();
    let enc = build_encoding(&a, spec).unwrap();
    let run = || {
        let mut src = SplitMix64Source::new(9);
        let c = sample_counts(&enc, &mut src, 20_000).unwrap();
        (c, src.bits_consumed())
    };
    assert_eq!(run(), run());
    assert_eq!(run().0.iter().sum::<u64>(), 20_000);
}
