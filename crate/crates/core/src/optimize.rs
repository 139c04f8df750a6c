//! Error-minimal `Z`-type approximations of a target distribution.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::ops::Bound;

use dashu_base::UnsignedAbs;
use dashu_int::{IBig, UBig};
use thiserror::Error;

use crate::divergence::{DivergenceError, EvalContext, EvalMode, GeneratorKind, TermEvaluator};
use crate::extreal::ExtReal;
use crate::numsys::{common_denominator, validate_distribution, NumSysError, PrecisionSpec, Rational};

/// Enumeration bound for [`brute_force_optimum`].
pub const BRUTE_FORCE_LIMIT: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OptimizeError {
    #[error(transparent)]
    Distribution(#[from] NumSysError),
    #[error(transparent)]
    Divergence(#[from] DivergenceError),
    #[error("Z must be at least 1")]
    ZeroDenominator,
    #[error("numerators sum to {sum}, expected {z}")]
    SumMismatch { sum: UBig, z: UBig },
    #[error("brute force over {n} outcomes with Z = {z} exceeds the enumeration limit")]
    TooLarge { n: usize, z: UBig },
}

/// Integer numerators `M` of the distribution `M_i / Z`, with `sum M_i = Z`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    numerators: Vec<UBig>,
    denominator: UBig,
}

impl Assignment {
    pub fn new(numerators: Vec<UBig>, denominator: UBig) -> Result<Self, OptimizeError> {
        if denominator.is_zero() {
            return Err(OptimizeError::ZeroDenominator);
        }
        let sum = numerators.iter().fold(UBig::ZERO, |acc, m| acc + m);
        if sum != denominator {
            return Err(OptimizeError::SumMismatch { sum, z: denominator });
        }
        Ok(Self { numerators, denominator })
    }

    /// Writes a rational distribution over its least common denominator.
    pub fn from_distribution(q: &[Rational]) -> Self {
        let z = common_denominator(q);
        let numerators = q
            .iter()
            .map(|qi| {
                let scaled = qi * Rational::from(z.clone());
                UBig::try_from(scaled.numerator().clone()).unwrap_or(UBig::ZERO)
            })
            .collect();
        Self { numerators, denominator: z }
    }

    pub fn numerators(&self) -> &[UBig] {
        &self.numerators
    }

    pub fn denominator(&self) -> &UBig {
        &self.denominator
    }

    pub fn len(&self) -> usize {
        self.numerators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.numerators.is_empty()
    }

    pub fn probabilities(&self) -> Vec<Rational> {
        self.numerators
            .iter()
            .map(|m| Rational::from_parts(IBig::from(m.clone()), self.denominator.clone()))
            .collect()
    }

    pub fn into_numerators(self) -> Vec<UBig> {
        self.numerators
    }
}

/// One exchange (Step 3) or fill move (Step 7) made by the optimizer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Move {
    /// Index that gained one unit.
    pub plus: Option<usize>,
    /// Index that lost one unit.
    pub minus: Option<usize>,
    /// Change of the objective caused by the move.
    pub cost: ExtReal,
}

/// Result of [`optimize_z_report`] with the run's bookkeeping.
#[derive(Debug, Clone)]
pub struct OptimizeReport {
    pub assignment: Assignment,
    pub error: ExtReal,
    /// Objective of the initial rounding, before any move.
    pub initial_error: ExtReal,
    pub swaps: usize,
    /// `sum M_i - Z` after the exchange phase.
    pub shortfall: IBig,
    pub moves: Vec<Move>,
    /// Number of outcomes with positive target probability.
    pub support: usize,
}

impl OptimizeReport {
    /// True when every assignment has infinite divergence.
    pub fn is_infinite(&self) -> bool {
        self.error.is_infinite()
    }
}

struct Comparator {
    exact: bool,
    bits: usize,
}

impl Comparator {
    fn new(ctx: &EvalContext) -> Self {
        Self { exact: ctx.mode == EvalMode::Exact, bits: ctx.mantissa_bits }
    }

    fn cmp(&self, a: &ExtReal, b: &ExtReal) -> Ordering {
        if self.exact {
            a.cmp(b)
        } else {
            a.cmp_tol(b, self.bits)
        }
    }
}

/// Step costs of one direction, kept sorted for repeated argmin queries.
/// Moves that would leave `{0, ..., Z}` are left out of the sorted set.
struct CostBook {
    costs: Vec<Option<ExtReal>>,
    sorted: BTreeSet<(ExtReal, usize)>,
}

impl CostBook {
    fn new(costs: Vec<Option<ExtReal>>) -> Self {
        let sorted = costs.iter().zip(0..).filter_map(|(c, i)| c.clone().map(|c| (c, i))).collect();
        Self { costs, sorted }
    }

    fn update(&mut self, i: usize, cost: Option<ExtReal>) {
        if let Some(old) = core::mem::replace(&mut self.costs[i], cost.clone()) {
            self.sorted.remove(&(old, i));
        }
        if let Some(c) = cost {
            self.sorted.insert((c, i));
        }
    }

    /// Lowest index among the minimal feasible costs, skipping `exclude`.
    ///
    /// Entries are ordered by `(cost, index)`, so each block of identical costs
    /// is represented by its first entry and the rest of the block is skipped.
    fn best(&self, cmp: &Comparator, exclude: Option<usize>) -> Option<(ExtReal, usize)> {
        let mut start = Bound::Unbounded;
        let mut min: Option<ExtReal> = None;
        let mut index = usize::MAX;
        loop {
            let next = self.sorted.range((start, Bound::Unbounded)).find(|(_, i)| Some(*i) != exclude);
            let Some((c, i)) = next else { break };
            match &min {
                None => min = Some(c.clone()),
                Some(m) if cmp.cmp(c, m) != Ordering::Equal => break,
                Some(_) => {}
            }
            index = index.min(*i);
            start = Bound::Excluded((c.clone(), usize::MAX));
        }
        min.map(|_| (self.costs[index].clone().expect("sorted entries are feasible"), index))
    }
}

struct State<'a> {
    eval: &'a TermEvaluator,
    m: Vec<UBig>,
    terms: Vec<ExtReal>,
    plus: CostBook,
    minus: CostBook,
}

impl<'a> State<'a> {
    fn new(eval: &'a TermEvaluator, m: Vec<UBig>) -> Self {
        let terms: Vec<ExtReal> = m.iter().enumerate().map(|(i, mi)| eval.term(i, mi)).collect();
        let plus = (0..m.len()).map(|i| Self::cost(eval, i, &m[i], &terms[i], true)).collect();
        let minus = (0..m.len()).map(|i| Self::cost(eval, i, &m[i], &terms[i], false)).collect();
        Self { eval, m, terms, plus: CostBook::new(plus), minus: CostBook::new(minus) }
    }

    /// `None` when the move leaves `{0, ..., Z}`.
    fn cost(eval: &TermEvaluator, i: usize, mi: &UBig, current: &ExtReal, up: bool) -> Option<ExtReal> {
        let next = if up {
            if mi >= eval.z() {
                return None;
            }
            mi + UBig::ONE
        } else {
            if mi.is_zero() {
                return None;
            }
            mi - UBig::ONE
        };
        Some(&eval.term(i, &next) - current)
    }

    fn shift(&mut self, i: usize, up: bool) {
        if up {
            self.m[i] += UBig::ONE;
        } else {
            self.m[i] -= UBig::ONE;
        }
        self.terms[i] = self.eval.term(i, &self.m[i]);
        let p = Self::cost(self.eval, i, &self.m[i], &self.terms[i], true);
        let q = Self::cost(self.eval, i, &self.m[i], &self.terms[i], false);
        self.plus.update(i, p);
        self.minus.update(i, q);
    }

    fn objective(&self) -> ExtReal {
        self.terms.iter().fold(ExtReal::zero(), |acc, t| &acc + t)
    }
}

/// `p_i [g((M_i + delta) / (Z p_i)) - g(M_i / (Z p_i))]`, or `+inf` when
/// `M_i + delta` leaves `{0, ..., Z}`.
pub fn step_cost(
    assignment: &Assignment,
    i: usize,
    up: bool,
    p: &[Rational],
    kind: &GeneratorKind,
    ctx: &EvalContext,
) -> Result<ExtReal, OptimizeError> {
    let eval = TermEvaluator::new(p, assignment.denominator(), kind, ctx)?;
    let mi = &assignment.numerators()[i];
    Ok(State::cost(&eval, i, mi, &eval.term(i, mi), up).unwrap_or(ExtReal::Infinity))
}

fn check_inputs(p: &[Rational], z: &UBig) -> Result<(), OptimizeError> {
    validate_distribution(p)?;
    if z.is_zero() {
        return Err(OptimizeError::ZeroDenominator);
    }
    Ok(())
}

/// Error-minimal assignment in `M[n, Z]`. See [`optimize_z_report`].
pub fn optimize_z(
    p: &[Rational],
    z: &UBig,
    kind: &GeneratorKind,
    ctx: &EvalContext,
) -> Result<Assignment, OptimizeError> {
    optimize_z_report(p, z, kind, ctx).map(|r| r.assignment)
}

/// Runs the rounding, exchange, and fill phases and reports each move.
///
/// Outcomes with `p_i = 0` are removed first and receive `M_i = 0`. Every
/// argmin resolves ties to the lowest index; in float mode, values within the
/// context tolerance count as ties.
pub fn optimize_z_report(
    p: &[Rational],
    z: &UBig,
    kind: &GeneratorKind,
    ctx: &EvalContext,
) -> Result<OptimizeReport, OptimizeError> {
    check_inputs(p, z)?;
    ctx.check(kind)?;
    let support: Vec<usize> = (0..p.len()).filter(|&i| !p[i].is_zero()).collect();
    let reduced: Vec<Rational> = support.iter().map(|&i| p[i].clone()).collect();
    let eval = TermEvaluator::new(&reduced, z, kind, ctx)?;
    let cmp = Comparator::new(ctx);
    let n = reduced.len();

    let expand = |m: &[UBig]| {
        let mut full = vec![UBig::ZERO; p.len()];
        for (j, &i) in support.iter().enumerate() {
            full[i] = m[j].clone();
        }
        Assignment { numerators: full, denominator: z.clone() }
    };

    if n == 1 {
        let m = vec![z.clone()];
        let error = eval.total(&m);
        return Ok(OptimizeReport {
            assignment: expand(&m),
            initial_error: error.clone(),
            error,
            swaps: 0,
            shortfall: IBig::ZERO,
            moves: Vec::new(),
            support: 1,
        });
    }

    // Step 1: round each Z p_i down or up, whichever is cheaper (ties round down)
    let zr = Rational::from(z.clone());
    let initial: Vec<UBig> = (0..n)
        .map(|i| {
            let scaled = eval.p(i) * &zr;
            let floor = UBig::try_from(scaled.floor()).expect("non-negative");
            let up = &floor + UBig::ONE;
            if cmp.cmp(&eval.term(i, &floor), &eval.term(i, &up)) != Ordering::Greater {
                floor
            } else {
                up
            }
        })
        .collect();

    let mut state = State::new(&eval, initial);
    let initial_error = state.objective();
    let mut moves = Vec::new();
    let mut swaps = 0usize;

    // Step 3: exchange one unit between two outcomes while that strictly helps
    loop {
        let Some(pair) = best_pair(&state, &cmp) else { break };
        let (cost, j, jm) = pair;
        if cmp.cmp(&cost, &ExtReal::zero()) != Ordering::Less {
            break;
        }
        state.shift(j, true);
        state.shift(jm, false);
        swaps += 1;
        moves.push(Move { plus: Some(support[j]), minus: Some(support[jm]), cost });
    }

    // Steps 4-7: fix the total by moving single units in the cheapest direction
    let total = state.m.iter().fold(UBig::ZERO, |acc, m| acc + m);
    let shortfall = IBig::from(total) - IBig::from(z.clone());
    let up = shortfall < IBig::ZERO;
    let count = shortfall.clone().unsigned_abs();
    let mut done = UBig::ZERO;
    while done < count {
        let book = if up { &state.plus } else { &state.minus };
        let (cost, j) = book.best(&cmp, None).expect("non-empty");
        state.shift(j, up);
        let idx = support[j];
        moves.push(if up {
            Move { plus: Some(idx), minus: None, cost }
        } else {
            Move { plus: None, minus: Some(idx), cost }
        });
        done += UBig::ONE;
    }

    let error = state.objective();
    Ok(OptimizeReport {
        assignment: expand(&state.m),
        error,
        initial_error,
        swaps,
        shortfall,
        moves,
        support: n,
    })
}

/// Cheapest `(i, i')`, `i != i'`, for moving one unit from `i'` to `i`.
fn best_pair(state: &State<'_>, cmp: &Comparator) -> Option<(ExtReal, usize, usize)> {
    let (pc, j) = state.plus.best(cmp, None)?;
    let first = state.minus.best(cmp, Some(j)).map(|(mc, jm)| (&pc + &mc, j, jm));
    let (mc, jm) = state.minus.best(cmp, None)?;
    let second = state.plus.best(cmp, Some(jm)).map(|(pc2, j2)| (&pc2 + &mc, j2, jm));
    match (first, second) {
        (Some(a), Some(b)) => {
            if cmp.cmp(&b.0, &a.0) == Ordering::Less {
                Some(b)
            } else {
                Some(a)
            }
        }
        (a, b) => a.or(b),
    }
}

fn binomial_capped(n: u64, k: u64, cap: u64) -> Option<u64> {
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > cap as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

/// Exhaustive minimum over `M[n, Z]`, used as a test oracle.
///
/// The search runs as a dynamic program over outcomes, which visits the same
/// set as plain enumeration. Among equal objectives the lexicographically
/// greatest `M` is returned.
pub fn brute_force_optimum(
    p: &[Rational],
    z: &UBig,
    kind: &GeneratorKind,
    ctx: &EvalContext,
) -> Result<(Assignment, ExtReal), OptimizeError> {
    check_inputs(p, z)?;
    let n = p.len();
    let too_large = || OptimizeError::TooLarge { n, z: z.clone() };
    let zs = u64::try_from(z).map_err(|_| too_large())?;
    binomial_capped(zs + n as u64 - 1, n as u64 - 1, BRUTE_FORCE_LIMIT).ok_or_else(too_large)?;
    let eval = TermEvaluator::new(p, z, kind, ctx)?;
    let cmp = Comparator::new(ctx);
    let zu = zs as usize;
    let table: Vec<Vec<ExtReal>> =
        (0..n).map(|i| (0..=zu).map(|m| eval.term(i, &UBig::from(m))).collect()).collect();

    // best[r] for the suffix i.. holding r units, with the chosen M_i
    let mut best: Vec<ExtReal> = (0..=zu).map(|r| table[n - 1][r].clone()).collect();
    let mut choice: Vec<Vec<usize>> = vec![Vec::new(); n];
    choice[n - 1] = (0..=zu).collect();
    for i in (0..n - 1).rev() {
        let mut next = Vec::with_capacity(zu + 1);
        let mut pick = Vec::with_capacity(zu + 1);
        for r in 0..=zu {
            let mut top: Option<(ExtReal, usize)> = None;
            for m in (0..=r).rev() {
                let v = &table[i][m] + &best[r - m];
                match &top {
                    Some((t, _)) if cmp.cmp(&v, t) != Ordering::Less => {}
                    _ => top = Some((v, m)),
                }
            }
            let (v, m) = top.unwrap();
            next.push(v);
            pick.push(m);
        }
        best = next;
        choice[i] = pick;
    }
    let mut rest = zu;
    let mut m = Vec::with_capacity(n);
    for row in &choice {
        let mi = row[rest];
        m.push(UBig::from(mi));
        rest -= mi;
    }
    let error = best[zu].clone();
    Ok((Assignment { numerators: m, denominator: z.clone() }, error))
}

/// Which samplers a precision budget ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrecisionClass {
    /// Every entropy-optimal sampler of depth `k`: all `N_kl`, `0 <= l <= k`.
    AllEntropyOptimal,
    /// Samplers that halt within `k` bits: `Z = 2^k` only.
    BoundedDyadic,
}

impl PrecisionClass {
    /// Systems searched for precision `k`, in increasing `l`.
    pub fn candidates(&self, k: u32) -> Result<Vec<PrecisionSpec>, NumSysError> {
        match self {
            PrecisionClass::AllEntropyOptimal => (0..=k).map(|l| PrecisionSpec::new(k, l)).collect(),
            PrecisionClass::BoundedDyadic => Ok(vec![PrecisionSpec::dyadic(k)?]),
        }
    }
}

/// Closest approximation under a precision budget.
#[derive(Debug, Clone)]
pub struct ApproxResult {
    pub assignment: Assignment,
    pub spec: PrecisionSpec,
    pub error: ExtReal,
    pub kind: GeneratorKind,
}

/// Picks the smallest error; equal errors prefer the larger `l`.
pub fn select_best(results: Vec<ApproxResult>, ctx: &EvalContext) -> Option<ApproxResult> {
    let cmp = Comparator::new(ctx);
    let mut best: Option<ApproxResult> = None;
    for r in results {
        best = match best {
            None => Some(r),
            Some(b) => match cmp.cmp(&r.error, &b.error) {
                Ordering::Less => Some(r),
                Ordering::Equal if r.spec.l() > b.spec.l() => Some(r),
                _ => Some(b),
            },
        };
    }
    best
}

/// Runs [`optimize_z`] for one system.
pub fn approx_for_spec(
    p: &[Rational],
    spec: PrecisionSpec,
    kind: &GeneratorKind,
    ctx: &EvalContext,
) -> Result<ApproxResult, OptimizeError> {
    let report = optimize_z_report(p, &spec.z(), kind, ctx)?;
    Ok(ApproxResult { assignment: report.assignment, spec, error: report.error, kind: kind.clone() })
}

/// Smallest-error approximation over the systems allowed by `class`.
pub fn closest_approx(
    p: &[Rational],
    k: u32,
    kind: &GeneratorKind,
    ctx: &EvalContext,
    class: PrecisionClass,
) -> Result<ApproxResult, OptimizeError> {
    let results = class
        .candidates(k)?
        .into_iter()
        .map(|spec| approx_for_spec(p, spec, kind, ctx))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(select_best(results, ctx).expect("at least one candidate"))
}
