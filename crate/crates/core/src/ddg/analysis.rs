use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use dashu_base::UnsignedAbs;
use dashu_int::UBig;

use super::{DdgError, LinearEncoding};
use crate::float::{Float, LnContext};
use crate::numsys::Rational;

/// Mantissa width of [`shannon_entropy`].
pub const ENTROPY_BITS: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub output_distribution: Vec<Rational>,
    pub expected_bits: Rational,
    pub entropy: Float,
}

/// Value of a cell as an affine form in the unknown values of back-edge
/// targets. The constant part holds one absorption probability per outcome
/// followed by the expected number of remaining flips.
#[derive(Clone)]
struct Affine {
    coeff: Vec<Rational>,
    constant: Vec<Rational>,
}

impl Affine {
    fn zero(vars: usize, width: usize) -> Self {
        Self { coeff: vec![Rational::ZERO; vars], constant: vec![Rational::ZERO; width] }
    }

    fn add_half(&mut self, other: &Affine) {
        let half = Rational::from_parts(1.into(), UBig::from(2u8));
        for (a, b) in self.coeff.iter_mut().zip(&other.coeff) {
            if !b.is_zero() {
                *a += b * &half;
            }
        }
        for (a, b) in self.constant.iter_mut().zip(&other.constant) {
            if !b.is_zero() {
                *a += b * &half;
            }
        }
    }
}

/// Absorption probabilities and expected flips from the root.
///
/// Cells are states of a Markov chain where a branch moves to either child
/// with probability 1/2. Edges to later cells form a DAG and are folded in by
/// back-substitution; edges to the same or earlier cells introduce unknowns,
/// which are then solved by Gaussian elimination.
fn solve(enc: &LinearEncoding) -> Result<(Vec<Rational>, Rational), DdgError> {
    let n = enc.n();
    let cells = enc.cells();
    let mut states = enc.reachable()?;
    if cells[0] < 0 {
        let mut dist = vec![Rational::ZERO; n];
        dist[(-cells[0]) as usize - 1] = Rational::ONE;
        return Ok((dist, Rational::ZERO));
    }
    states.sort_unstable();

    let mut var_of: BTreeMap<usize, usize> = BTreeMap::new();
    for &c in &states {
        if cells[c] >= 0 {
            for t in [cells[c] as usize, cells[c + 1] as usize] {
                if t <= c {
                    let next = var_of.len();
                    var_of.entry(t).or_insert(next);
                }
            }
        }
    }
    let vars = var_of.len();
    let width = n + 1;

    let mut forms: BTreeMap<usize, Affine> = BTreeMap::new();
    for &c in states.iter().rev() {
        let mut form = Affine::zero(vars, width);
        if cells[c] < 0 {
            form.constant[(-cells[c]) as usize - 1] = Rational::ONE;
        } else {
            form.constant[n] = Rational::ONE;
            for t in [cells[c] as usize, cells[c + 1] as usize] {
                if t <= c {
                    let mut unit = Affine::zero(vars, width);
                    unit.coeff[var_of[&t]] = Rational::ONE;
                    form.add_half(&unit);
                } else {
                    form.add_half(&forms[&t]);
                }
            }
        }
        forms.insert(c, form);
    }

    // x_t = form(t) for every target t, i.e. (I - A) X = B
    let mut rows: Vec<Vec<Rational>> = Vec::with_capacity(vars);
    let mut order: Vec<(usize, usize)> = var_of.iter().map(|(&t, &v)| (v, t)).collect();
    order.sort_unstable();
    for &(v, t) in &order {
        let f = &forms[&t];
        let mut row: Vec<Rational> = f.coeff.iter().map(|a| -a.clone()).collect();
        row[v] += Rational::ONE;
        row.extend(f.constant.iter().cloned());
        rows.push(row);
    }
    let x = gauss(rows, vars, width)?;

    let root = &forms[&0];
    let mut value = root.constant.clone();
    for (j, a) in root.coeff.iter().enumerate() {
        if !a.is_zero() {
            for (vk, xk) in value.iter_mut().zip(&x[j]) {
                *vk += a * xk;
            }
        }
    }
    let bits = value.pop().expect("time column");
    Ok((value, bits))
}

/// Solves the augmented system in place; returns one solution row per
/// unknown.
fn gauss(mut rows: Vec<Vec<Rational>>, vars: usize, width: usize) -> Result<Vec<Vec<Rational>>, DdgError> {
    for col in 0..vars {
        let pivot = (col..vars)
            .find(|&r| !rows[r][col].is_zero())
            .ok_or(DdgError::NotWellFormed("a cycle never reaches a leaf"))?;
        rows.swap(col, pivot);
        let inv = Rational::ONE / rows[col][col].clone();
        for v in rows[col].iter_mut() {
            *v *= &inv;
        }
        let pivot_row = rows[col].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r == col || row[col].is_zero() {
                continue;
            }
            let factor = row[col].clone();
            for (v, p) in row.iter_mut().zip(&pivot_row).skip(col) {
                if !p.is_zero() {
                    *v -= &factor * p;
                }
            }
        }
    }
    Ok(rows.into_iter().map(|r| r[vars..vars + width].to_vec()).collect())
}

/// Exact probability of each outcome.
pub fn exact_output_distribution(enc: &LinearEncoding) -> Result<Vec<Rational>, DdgError> {
    solve(enc).map(|(dist, _)| dist)
}

/// Exact expected number of flips per sample.
pub fn expected_bits(enc: &LinearEncoding) -> Result<Rational, DdgError> {
    solve(enc).map(|(_, bits)| bits)
}

/// `sum p_i log2(1 / p_i)` at 128 bits of mantissa.
pub fn shannon_entropy(dist: &[Rational]) -> Float {
    let ctx = LnContext::new(ENTROPY_BITS + 32);
    let ln2 = ctx.ln_ratio(&UBig::from(2u8), &UBig::ONE);
    let mut total = Float::ZERO.with_precision(ENTROPY_BITS + 32).value();
    for p in dist {
        if p.is_zero() {
            continue;
        }
        let num = p.numerator().unsigned_abs();
        let ln_inv = ctx.ln_ratio(p.denominator(), &num);
        let pf = crate::float::float_from_rational(p, ENTROPY_BITS + 32);
        total += pf * ln_inv;
    }
    (total / ln2).with_precision(ENTROPY_BITS).value()
}

pub fn analyze(enc: &LinearEncoding) -> Result<AnalysisReport, DdgError> {
    let (output_distribution, expected_bits) = solve(enc)?;
    let entropy = shannon_entropy(&output_distribution);
    Ok(AnalysisReport { output_distribution, expected_bits, entropy })
}
