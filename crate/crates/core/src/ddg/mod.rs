//! Entropy-optimal DDG samplers: probability matrix, pseudotree, and the
//! packed linear encoding walked by the runtime.

use alloc::vec::Vec;

use dashu_int::UBig;
use thiserror::Error;

use crate::numsys::{encode_numsys, NumSysError, PrecisionSpec};
use crate::optimize::Assignment;

mod analysis;
mod tree;

pub use analysis::{analyze, exact_output_distribution, expected_bits, shannon_entropy, AnalysisReport};
pub use tree::{leaf_table, make_tree, pack_tree, DdgNode, DdgTree, LeafTable};

/// Largest `n * k` accepted for tree construction.
pub const MAX_CELLS: usize = 1 << 26;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DdgError {
    #[error("outcome {outcome} has probability 1; use the trivial sampler")]
    Degenerate { outcome: usize },
    #[error("numerators sum to Z = {got}, but the precision requires Z = {want}")]
    DenominatorMismatch { got: UBig, want: UBig },
    #[error("malformed probability matrix: {0}")]
    Structural(&'static str),
    #[error("encoding is not well formed: {0}")]
    NotWellFormed(&'static str),
    #[error("n = {n}, k = {k} exceeds the encoding capacity")]
    Capacity { n: usize, k: u32 },
    #[error(transparent)]
    NumSys(#[from] NumSysError),
}

/// `n x k` bit matrix; row `i` is the concise expansion of `M_i / Z_kl`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProbabilityMatrix {
    bits: Vec<u8>,
    n: usize,
    spec: PrecisionSpec,
}

impl ProbabilityMatrix {
    /// Builds a matrix from explicit rows. Rows must all have length `k`.
    pub fn from_rows(rows: &[Vec<bool>], spec: PrecisionSpec) -> Result<Self, DdgError> {
        let k = spec.k() as usize;
        if rows.iter().any(|r| r.len() != k) {
            return Err(DdgError::Structural("row length differs from k"));
        }
        let bits = rows.iter().flat_map(|r| r.iter().map(|&b| b as u8)).collect();
        Ok(Self { bits, n: rows.len(), spec })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> u32 {
        self.spec.k()
    }

    pub fn l(&self) -> u32 {
        self.spec.l()
    }

    pub fn spec(&self) -> PrecisionSpec {
        self.spec
    }

    #[inline]
    pub fn bit(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.spec.k() as usize + col] != 0
    }

    pub fn row(&self, i: usize) -> Vec<bool> {
        let k = self.spec.k() as usize;
        self.bits[i * k..(i + 1) * k].iter().map(|&b| b != 0).collect()
    }

    pub fn rows(&self) -> Vec<Vec<bool>> {
        (0..self.n).map(|i| self.row(i)).collect()
    }
}

/// Row `i` is the prefix followed by the suffix of `M_i / Z_kl`.
pub fn build_matrix(m: &Assignment, spec: PrecisionSpec) -> Result<ProbabilityMatrix, DdgError> {
    let z = spec.z();
    if m.denominator() != &z {
        return Err(DdgError::DenominatorMismatch { got: m.denominator().clone(), want: z });
    }
    if let Some(outcome) = m.numerators().iter().position(|x| x == &z) {
        return Err(DdgError::Degenerate { outcome });
    }
    check_capacity(m.len(), spec.k())?;
    let mut bits = Vec::with_capacity(m.len() * spec.k() as usize);
    for mi in m.numerators() {
        let exp = encode_numsys(mi, spec)?;
        bits.extend(exp.bits().map(|b| b as u8));
    }
    Ok(ProbabilityMatrix { bits, n: m.len(), spec })
}

fn check_capacity(n: usize, k: u32) -> Result<(), DdgError> {
    match n.checked_mul(k as usize).and_then(|c| c.checked_mul(3)) {
        Some(c) if c <= MAX_CELLS => Ok(()),
        _ => Err(DdgError::Capacity { n, k }),
    }
}

/// Flat sampler layout: a leaf cell holds `-(outcome + 1)`, a branch at `c`
/// holds its left and right child cells at `c` and `c + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LinearEncoding {
    cells: Vec<i64>,
    n: usize,
    spec: PrecisionSpec,
}

impl LinearEncoding {
    /// Checks every reachable cell and wraps the array.
    pub fn new(cells: Vec<i64>, n: usize, spec: PrecisionSpec) -> Result<Self, DdgError> {
        let enc = Self { cells, n, spec };
        enc.validate()?;
        Ok(enc)
    }

    /// One-cell encoding that returns `outcome` without consuming bits.
    pub fn degenerate(n: usize, outcome: usize, spec: PrecisionSpec) -> Self {
        Self { cells: alloc::vec![-(outcome as i64) - 1], n, spec }
    }

    pub fn cells(&self) -> &[i64] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spec(&self) -> PrecisionSpec {
        self.spec
    }

    pub fn is_degenerate(&self) -> bool {
        self.cells.first().is_some_and(|&c| c < 0)
    }

    /// Cells reachable from the root, in discovery order, with branch
    /// children bounds-checked.
    pub(crate) fn reachable(&self) -> Result<Vec<usize>, DdgError> {
        let len = self.cells.len();
        if len == 0 {
            return Err(DdgError::NotWellFormed("empty encoding"));
        }
        let mut seen = alloc::vec![false; len];
        let mut order = Vec::new();
        let mut stack = alloc::vec![0usize];
        seen[0] = true;
        while let Some(c) = stack.pop() {
            order.push(c);
            let v = self.cells[c];
            if v < 0 {
                if (-v) as u64 > self.n as u64 {
                    return Err(DdgError::NotWellFormed("leaf label out of range"));
                }
                continue;
            }
            if c + 1 >= len {
                return Err(DdgError::NotWellFormed("branch at the last cell"));
            }
            for t in [self.cells[c], self.cells[c + 1]] {
                if t < 0 || t as usize >= len {
                    return Err(DdgError::NotWellFormed("child index out of range"));
                }
                let t = t as usize;
                if !seen[t] {
                    seen[t] = true;
                    stack.push(t);
                }
            }
        }
        Ok(order)
    }

    fn validate(&self) -> Result<(), DdgError> {
        self.reachable().map(|_| ())
    }
}

/// Matrix, tree and packing in one step; degenerate targets get the
/// one-cell encoding.
pub fn build_encoding(m: &Assignment, spec: PrecisionSpec) -> Result<LinearEncoding, DdgError> {
    match build_matrix(m, spec) {
        Ok(matrix) => pack_tree(&make_tree(&matrix)?),
        Err(DdgError::Degenerate { outcome }) => Ok(LinearEncoding::degenerate(m.len(), outcome, spec)),
        Err(e) => Err(e),
    }
}
