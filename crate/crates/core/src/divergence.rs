//! The f-divergence catalog and the objective `sum_i p_i g(M_i / (Z p_i))`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use dashu_base::{Abs, UnsignedAbs};
use dashu_int::{IBig, UBig};
use thiserror::Error;

use crate::extreal::ExtReal;
use crate::float::{float_from_rational, Float, LnContext};
use crate::numsys::{parse_rational, Rational};
use crate::optimize::Assignment;

/// Default mantissa width for float evaluation.
pub const DEFAULT_MANTISSA_BITS: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DivergenceError {
    #[error("exact evaluation is not available for {0}")]
    ExactUnavailable(GeneratorKind),
    #[error("distribution has {p} entries but assignment has {m}")]
    DimensionMismatch { p: usize, m: usize },
    #[error("alpha must satisfy alpha^2 != 1")]
    InvalidAlpha,
    #[error("unknown divergence `{0}`")]
    UnknownName(String),
    #[error("generator argument must be non-negative")]
    NegativeArgument,
}

/// Generators `g`, each convex on `(0, inf)` with `g(1) = 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum GeneratorKind {
    /// `|t - 1| / 2`
    TotalVariation,
    /// `(sqrt t - 1)^2`
    Hellinger,
    /// `(t - 1)^2`
    PearsonChiSquared,
    /// `(t - 1)^2 / (t + 1)`
    TriangularDiscrimination,
    /// `t ln t`, i.e. `KL(q || p)`
    ReverseKL,
    /// `-ln t`, i.e. `KL(p || q)`
    ForwardKL,
    /// `4 (1 - t^((1 + a) / 2)) / (1 - a^2)`
    Alpha(Rational),
}

impl GeneratorKind {
    pub fn alpha(a: Rational) -> Result<Self, DivergenceError> {
        if &a * &a == Rational::ONE {
            return Err(DivergenceError::InvalidAlpha);
        }
        Ok(GeneratorKind::Alpha(a))
    }

    /// Parses the command-line names: `tv`, `hellinger`, `pearson-chi2`,
    /// `triangular`, `reverse-kl`, `forward-kl`, `alpha:<rational>`.
    pub fn parse(name: &str) -> Result<Self, DivergenceError> {
        let kind = match name {
            "tv" => GeneratorKind::TotalVariation,
            "hellinger" => GeneratorKind::Hellinger,
            "pearson-chi2" => GeneratorKind::PearsonChiSquared,
            "triangular" => GeneratorKind::TriangularDiscrimination,
            "reverse-kl" => GeneratorKind::ReverseKL,
            "forward-kl" => GeneratorKind::ForwardKL,
            other => {
                let a = other
                    .strip_prefix("alpha:")
                    .and_then(parse_rational)
                    .ok_or_else(|| DivergenceError::UnknownName(other.to_string()))?;
                return Self::alpha(a);
            }
        };
        Ok(kind)
    }

    pub fn name(&self) -> String {
        match self {
            GeneratorKind::TotalVariation => "tv".into(),
            GeneratorKind::Hellinger => "hellinger".into(),
            GeneratorKind::PearsonChiSquared => "pearson-chi2".into(),
            GeneratorKind::TriangularDiscrimination => "triangular".into(),
            GeneratorKind::ReverseKL => "reverse-kl".into(),
            GeneratorKind::ForwardKL => "forward-kl".into(),
            GeneratorKind::Alpha(a) => alloc::format!("alpha:{a}"),
        }
    }

    /// Whether `g` is a rational function, so exact evaluation is possible.
    pub fn is_rational(&self) -> bool {
        matches!(
            self,
            GeneratorKind::TotalVariation
                | GeneratorKind::PearsonChiSquared
                | GeneratorKind::TriangularDiscrimination
        )
    }

    /// The exponent `(1 + a) / 2` of the alpha family.
    fn alpha_exponent(a: &Rational) -> Rational {
        (Rational::ONE + a) / Rational::from(2u8)
    }

    /// `g(0)`, as the right limit.
    pub fn at_zero(&self) -> ExtReal {
        let r = |n: i64, d: u64| ExtReal::Exact(Rational::from_parts(IBig::from(n), UBig::from(d)));
        match self {
            GeneratorKind::TotalVariation => r(1, 2),
            GeneratorKind::Hellinger
            | GeneratorKind::PearsonChiSquared
            | GeneratorKind::TriangularDiscrimination => r(1, 1),
            GeneratorKind::ReverseKL => r(0, 1),
            GeneratorKind::ForwardKL => ExtReal::Infinity,
            GeneratorKind::Alpha(a) => {
                if Self::alpha_exponent(a) > Rational::ZERO {
                    ExtReal::Exact(Rational::from(4u8) / (Rational::ONE - a * a))
                } else {
                    ExtReal::Infinity
                }
            }
        }
    }

    /// `lim_{t -> inf} g(t)`.
    pub fn at_infinity(&self) -> ExtReal {
        match self {
            GeneratorKind::ForwardKL => ExtReal::NegInfinity,
            GeneratorKind::Alpha(a) => {
                let s = Self::alpha_exponent(a);
                if s < Rational::ZERO {
                    ExtReal::Exact(Rational::from(4u8) / (Rational::ONE - a * a))
                } else if s < Rational::ONE {
                    ExtReal::NegInfinity
                } else {
                    ExtReal::Infinity
                }
            }
            _ => ExtReal::Infinity,
        }
    }

    /// `lim_{u -> inf} g(u) / u`, the weight of mass placed where `p_i = 0`.
    pub fn slope_at_infinity(&self) -> ExtReal {
        match self {
            GeneratorKind::TotalVariation => {
                ExtReal::Exact(Rational::from_parts(IBig::ONE, UBig::from(2u8)))
            }
            GeneratorKind::Hellinger | GeneratorKind::TriangularDiscrimination => {
                ExtReal::Exact(Rational::ONE)
            }
            GeneratorKind::PearsonChiSquared | GeneratorKind::ReverseKL => ExtReal::Infinity,
            GeneratorKind::ForwardKL => ExtReal::zero(),
            GeneratorKind::Alpha(a) => {
                if Self::alpha_exponent(a) > Rational::ONE {
                    ExtReal::Infinity
                } else {
                    ExtReal::zero()
                }
            }
        }
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EvalMode {
    Exact,
    Float,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EvalContext {
    pub mode: EvalMode,
    pub mantissa_bits: usize,
}

impl EvalContext {
    pub fn exact() -> Self {
        Self { mode: EvalMode::Exact, mantissa_bits: DEFAULT_MANTISSA_BITS }
    }

    pub fn float(mantissa_bits: usize) -> Self {
        Self { mode: EvalMode::Float, mantissa_bits }
    }

    /// Exact where the generator allows it, otherwise float at the default width.
    pub fn preferred(kind: &GeneratorKind) -> Self {
        if kind.is_rational() {
            Self::exact()
        } else {
            Self::float(DEFAULT_MANTISSA_BITS)
        }
    }

    pub fn check(&self, kind: &GeneratorKind) -> Result<(), DivergenceError> {
        if self.mode == EvalMode::Exact && !kind.is_rational() {
            return Err(DivergenceError::ExactUnavailable(kind.clone()));
        }
        Ok(())
    }

    fn finish(&self, exact: Rational) -> ExtReal {
        match self.mode {
            EvalMode::Exact => ExtReal::Exact(exact),
            EvalMode::Float => ExtReal::Float(float_from_rational(&exact, self.mantissa_bits)),
        }
    }

    /// Converts exact values into this context's representation.
    pub fn lift(&self, v: ExtReal) -> ExtReal {
        match v {
            ExtReal::Exact(r) => self.finish(r),
            other => other,
        }
    }
}

impl Default for EvalContext {
    fn default() -> Self {
        Self::float(DEFAULT_MANTISSA_BITS)
    }
}

fn sqr(x: &Rational) -> Rational {
    x * x
}

/// Rational part shared by exact evaluation: `g(t)` for the rational kinds.
fn rational_g(kind: &GeneratorKind, t: &Rational) -> Option<Rational> {
    let d = t - Rational::ONE;
    match kind {
        GeneratorKind::TotalVariation => Some(d.abs() / Rational::from(2u8)),
        GeneratorKind::PearsonChiSquared => Some(sqr(&d)),
        GeneratorKind::TriangularDiscrimination => Some(sqr(&d) / (t + Rational::ONE)),
        _ => None,
    }
}

fn float_one(bits: usize) -> Float {
    Float::ONE.with_precision(bits).value()
}

fn pow_rational(t: &Float, s: &Rational, ln: &LnContext) -> Float {
    let bits = ln.precision();
    if s.denominator() == &UBig::ONE {
        if let Ok(e) = isize::try_from(s.numerator()) {
            let wide = t.clone().with_precision(bits + 32).value();
            return wide.powi(IBig::from(e)).with_precision(bits).value();
        }
    }
    let lt = ln.ln_float(t).with_precision(bits + 32).value();
    let sf = float_from_rational(s, bits + 32);
    (lt * sf).exp().with_precision(bits).value()
}

/// Evaluates `g(t)` with the limit conventions at `0` and `+inf`.
pub fn gen_eval(kind: &GeneratorKind, t: &ExtReal, ctx: &EvalContext) -> Result<ExtReal, DivergenceError> {
    ctx.check(kind)?;
    let t = match t {
        ExtReal::Infinity => return Ok(ctx.lift(kind.at_infinity())),
        ExtReal::NegInfinity => return Err(DivergenceError::NegativeArgument),
        finite => finite.to_rational().unwrap(),
    };
    if t < Rational::ZERO {
        return Err(DivergenceError::NegativeArgument);
    }
    if t.is_zero() {
        return Ok(ctx.lift(kind.at_zero()));
    }
    if let Some(v) = rational_g(kind, &t) {
        return Ok(ctx.finish(v));
    }
    let bits = ctx.mantissa_bits;
    let ln = LnContext::new(bits);
    let tf = float_from_rational(&t, bits + 32);
    let v = match kind {
        GeneratorKind::Hellinger => {
            let d = tf.sqrt() - float_one(bits + 32);
            &d * &d
        }
        GeneratorKind::ReverseKL => tf * ln.ln_rational(&t),
        GeneratorKind::ForwardKL => -ln.ln_rational(&t),
        GeneratorKind::Alpha(a) => {
            let s = GeneratorKind::alpha_exponent(a);
            let c = float_from_rational(&(Rational::from(4u8) / (Rational::ONE - a * a)), bits + 32);
            (float_one(bits + 32) - pow_rational(&tf, &s, &ln)) * c
        }
        _ => unreachable!("rational kinds handled above"),
    };
    Ok(ExtReal::Float(v.with_precision(bits).value()))
}

/// Per-cell data reused across many term evaluations.
#[derive(Debug, Clone)]
struct Cell {
    p: Rational,
    p_float: Option<Float>,
    sqrt_p: Option<Float>,
}

/// Evaluates single terms `p_i g(m / (Z p_i))` of the objective for a fixed
/// target, `Z`, generator, and context.
#[derive(Debug, Clone)]
pub struct TermEvaluator {
    kind: GeneratorKind,
    ctx: EvalContext,
    z: UBig,
    cells: Vec<Cell>,
    ln: Option<LnContext>,
    alpha: Option<(Rational, Float)>,
    slope_at_infinity: ExtReal,
}

impl TermEvaluator {
    pub fn new(p: &[Rational], z: &UBig, kind: &GeneratorKind, ctx: &EvalContext) -> Result<Self, DivergenceError> {
        ctx.check(kind)?;
        let bits = ctx.mantissa_bits + 32;
        let float_mode = ctx.mode == EvalMode::Float && !kind.is_rational();
        let cells = p
            .iter()
            .map(|pi| Cell {
                p: pi.clone(),
                p_float: float_mode.then(|| float_from_rational(pi, bits)),
                sqrt_p: (float_mode && *kind == GeneratorKind::Hellinger)
                    .then(|| float_from_rational(pi, bits).sqrt()),
            })
            .collect();
        let ln = matches!(kind, GeneratorKind::ReverseKL | GeneratorKind::ForwardKL | GeneratorKind::Alpha(_))
            .then(|| LnContext::new(bits));
        let alpha = match kind {
            GeneratorKind::Alpha(a) => {
                let c = Rational::from(4u8) / (Rational::ONE - a * a);
                Some((GeneratorKind::alpha_exponent(a), float_from_rational(&c, bits)))
            }
            _ => None,
        };
        Ok(Self {
            kind: kind.clone(),
            ctx: *ctx,
            z: z.clone(),
            cells,
            ln,
            alpha,
            slope_at_infinity: kind.slope_at_infinity(),
        })
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn z(&self) -> &UBig {
        &self.z
    }

    pub fn p(&self, i: usize) -> &Rational {
        &self.cells[i].p
    }

    pub fn kind(&self) -> &GeneratorKind {
        &self.kind
    }

    pub fn ctx(&self) -> &EvalContext {
        &self.ctx
    }

    fn round(&self, v: Float) -> ExtReal {
        ExtReal::Float(v.with_precision(self.ctx.mantissa_bits).value())
    }

    /// `p_i g(m / (Z p_i))`; cells with `p_i = 0` contribute
    /// `(m / Z) lim g(u) / u`.
    pub fn term(&self, i: usize, m: &UBig) -> ExtReal {
        let cell = &self.cells[i];
        let q = Rational::from_parts(IBig::from(m.clone()), self.z.clone());
        if cell.p.is_zero() {
            return self.ctx.lift(self.slope_at_infinity.scale(&q));
        }
        if m.is_zero() {
            return self.ctx.lift(self.kind.at_zero().scale(&cell.p));
        }
        let diff = &q - &cell.p;
        match &self.kind {
            GeneratorKind::TotalVariation => return self.ctx.finish(diff.abs() / Rational::from(2u8)),
            GeneratorKind::PearsonChiSquared => return self.ctx.finish(sqr(&diff) / &cell.p),
            GeneratorKind::TriangularDiscrimination => return self.ctx.finish(sqr(&diff) / (&q + &cell.p)),
            _ => {}
        }
        let bits = self.ctx.mantissa_bits + 32;
        let p_float = cell.p_float.as_ref().expect("float cell data");
        match &self.kind {
            // p (sqrt t - 1)^2 = (sqrt q - sqrt p)^2
            GeneratorKind::Hellinger => {
                let d = float_from_rational(&q, bits).sqrt() - cell.sqrt_p.as_ref().unwrap();
                self.round(&d * &d)
            }
            // q ln(q / p)
            GeneratorKind::ReverseKL => {
                let l = self.ln_ratio(&q, &cell.p);
                self.round(float_from_rational(&q, bits) * l)
            }
            // p ln(p / q)
            GeneratorKind::ForwardKL => {
                let l = self.ln_ratio(&cell.p, &q);
                self.round(p_float * &l)
            }
            GeneratorKind::Alpha(_) => {
                let (s, c) = self.alpha.as_ref().unwrap();
                let t = float_from_rational(&(&q / &cell.p), bits);
                let ts = pow_rational(&t, s, self.ln.as_ref().unwrap());
                self.round((float_one(bits) - ts) * c * p_float)
            }
            _ => unreachable!("rational kinds handled above"),
        }
    }

    fn ln_ratio(&self, a: &Rational, b: &Rational) -> Float {
        let ln = self.ln.as_ref().unwrap();
        let num = a.numerator().unsigned_abs() * b.denominator();
        let den = b.numerator().unsigned_abs() * a.denominator();
        ln.ln_ratio(&num, &den)
    }

    pub fn total(&self, m: &[UBig]) -> ExtReal {
        m.iter().enumerate().fold(ExtReal::zero(), |acc, (i, mi)| &acc + &self.term(i, mi))
    }
}

/// `sum_i p_i g(M_i / (Z p_i))`.
pub fn divergence(
    p: &[Rational],
    assignment: &Assignment,
    kind: &GeneratorKind,
    ctx: &EvalContext,
) -> Result<ExtReal, DivergenceError> {
    if p.len() != assignment.numerators().len() {
        return Err(DivergenceError::DimensionMismatch { p: p.len(), m: assignment.numerators().len() });
    }
    let eval = TermEvaluator::new(p, assignment.denominator(), kind, ctx)?;
    Ok(eval.total(assignment.numerators()))
}

/// Divergence between `p` and an arbitrary rational distribution `q`.
pub fn divergence_between(
    p: &[Rational],
    q: &[Rational],
    kind: &GeneratorKind,
    ctx: &EvalContext,
) -> Result<ExtReal, DivergenceError> {
    if p.len() != q.len() {
        return Err(DivergenceError::DimensionMismatch { p: p.len(), m: q.len() });
    }
    let assignment = Assignment::from_distribution(q);
    divergence(p, &assignment, kind, ctx)
}
