#![no_std]

extern crate alloc;

pub mod numsys;

pub use numsys::{
    decode_numsys, encode_numsys, minimal_exact_precision, multiplicative_order, BinaryExpansion,
    ExactPrecision, NumSysError, PrecisionSpec, Rational,
};
pub mod extreal;
pub mod float;

pub use extreal::ExtReal;
pub use float::{Float, LnContext};
pub mod divergence;
pub mod optimize;

pub use divergence::{divergence, gen_eval, EvalContext, EvalMode, GeneratorKind};
pub use optimize::{
    brute_force_optimum, closest_approx, optimize_z, optimize_z_report, step_cost, ApproxResult, Assignment,
    PrecisionClass,
};
pub mod ddg;
pub use ddg::{analyze, build_encoding, build_matrix, exact_output_distribution, expected_bits, make_tree, pack_tree, shannon_entropy, AnalysisReport, DdgError, LinearEncoding, ProbabilityMatrix};
pub mod runtime;
pub use runtime::{enumerate_outcomes, sample_encoding, sample_matrix, BitSource, Enumeration, FixedBitsSource, NeedMoreBits, SplitMix64Source};
pub mod baselines;
pub use baselines::{inversion_output_distribution, inversion_sample, rejection_expected_bits, rejection_sample, BaselineMethod, BaselineReport, InversionRule};
