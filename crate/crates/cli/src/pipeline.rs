//! Multi-step operations shared by the command line and the test suites.

use dashu_base::BitTest;
use dashu_int::UBig;
use optsample_core::baselines::{inversion_report, BaselineError};
use optsample_core::divergence::divergence_between;
use optsample_core::numsys::common_denominator;
use optsample_core::optimize::{approx_for_spec, select_best, OptimizeError};
use optsample_core::{
    analyze, build_encoding, rejection_expected_bits, shannon_entropy, ApproxResult, DdgError, EvalContext, ExtReal,
    GeneratorKind, InversionRule, LinearEncoding, PrecisionClass, Rational,
};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
    #[error(transparent)]
    Ddg(#[from] DdgError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
}

impl From<optsample_core::NumSysError> for PipelineError {
    fn from(e: optsample_core::NumSysError) -> Self {
        PipelineError::Optimize(e.into())
    }
}

impl From<optsample_core::divergence::DivergenceError> for PipelineError {
    fn from(e: optsample_core::divergence::DivergenceError) -> Self {
        PipelineError::Optimize(e.into())
    }
}

/// Same answer as `closest_approx`, with the systems solved in parallel.
pub fn closest_approx_par(
    p: &[Rational],
    k: u32,
    kind: &GeneratorKind,
    ctx: &EvalContext,
    class: PrecisionClass,
) -> Result<ApproxResult, PipelineError> {
    let results = class
        .candidates(k)?
        .into_par_iter()
        .map(|spec| approx_for_spec(p, spec, kind, ctx))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(select_best(results, ctx).expect("at least one candidate"))
}

pub fn encode_result(result: &ApproxResult) -> Result<LinearEncoding, PipelineError> {
    Ok(build_encoding(&result.assignment, result.spec)?)
}

/// One line of the `compare` table.
#[derive(Debug, Clone)]
pub struct CompareRow {
    pub method: &'static str,
    pub k: u32,
    pub l: Option<u32>,
    pub z: UBig,
    pub error: ExtReal,
    pub expected_bits: Rational,
}

/// Optimal samplers (all systems and dyadic only) against `k`-bit
/// inversion and exact rejection sampling of `p`.
pub fn compare(
    p: &[Rational],
    k: u32,
    kind: &GeneratorKind,
    ctx: &EvalContext,
) -> Result<Vec<CompareRow>, PipelineError> {
    let mut rows = Vec::new();
    for (method, class) in [("optimal", PrecisionClass::AllEntropyOptimal), ("optimal-dyadic", PrecisionClass::BoundedDyadic)] {
        let best = closest_approx_par(p, k, kind, ctx, class)?;
        let enc = encode_result(&best)?;
        rows.push(CompareRow {
            method,
            k,
            l: Some(best.spec.l()),
            z: best.spec.z(),
            expected_bits: analyze(&enc)?.expected_bits,
            error: best.error,
        });
    }
    let inv = inversion_report(p, k, InversionRule::Strict, kind, ctx)?;
    rows.push(CompareRow {
        method: "inversion",
        k,
        l: None,
        z: UBig::ONE << k as usize,
        error: inv.error_vs_target,
        expected_bits: inv.expected_bits,
    });
    let d = common_denominator(p);
    let width = if d <= UBig::ONE { 0 } else { (&d - UBig::ONE).bit_len() as u32 };
    let bits = if width == 0 { Rational::ZERO } else { rejection_expected_bits(&d, width)? };
    rows.push(CompareRow {
        method: "rejection",
        k: width,
        l: None,
        z: d,
        error: divergence_between(p, p, kind, ctx)?,
        expected_bits: bits,
    });
    Ok(rows)
}

/// Optimal error and expected bits for one `(target, k, divergence)` cell.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub target: usize,
    pub k: u32,
    pub kind: usize,
    pub error: ExtReal,
    pub expected_bits: Rational,
}

/// Evaluates every cell in parallel; the result is ordered by target, then
/// divergence, then `k`.
pub fn sweep(
    targets: &[Vec<Rational>],
    ks: &[u32],
    kinds: &[GeneratorKind],
    ctx_for: impl Fn(&GeneratorKind) -> EvalContext + Sync,
) -> Result<Vec<SweepCell>, PipelineError> {
    let mut jobs = Vec::new();
    for t in 0..targets.len() {
        for g in 0..kinds.len() {
            for &k in ks {
                jobs.push((t, g, k));
            }
        }
    }
    jobs.into_par_iter()
        .map(|(t, g, k)| {
            let ctx = ctx_for(&kinds[g]);
            let best = optsample_core::closest_approx(&targets[t], k, &kinds[g], &ctx, PrecisionClass::AllEntropyOptimal)?;
            let enc = encode_result(&best)?;
            Ok(SweepCell { target: t, k, kind: g, error: best.error, expected_bits: analyze(&enc)?.expected_bits })
        })
        .collect()
}

pub fn entropy_f64(p: &[Rational]) -> f64 {
    shannon_entropy(p).to_f64().value()
}
