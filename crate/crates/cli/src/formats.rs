//! JSON and binary artifacts. Fractions travel as strings so no value passes
//! through a float.

use std::io::{Read, Write};

use dashu_int::UBig;
use optsample_core::numsys::parse_rational;
use optsample_core::{Assignment, LinearEncoding, PrecisionSpec, Rational};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub const DDG1_MAGIC: &[u8; 4] = b"DDG1";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid weight {0:?}")]
    Weight(String),
    #[error("weights must be non-negative with a positive sum")]
    Weights,
    #[error("invalid value for {field}: {value:?}")]
    Field { field: &'static str, value: String },
    #[error("bad DDG1 file: {0}")]
    Binary(&'static str),
    #[error(transparent)]
    Core(#[from] optsample_core::DdgError),
}

/// `{"weights": [...]}`; entries are integers, decimals or `"a/b"` strings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistributionFile {
    pub weights: Vec<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<Value>,
}

impl DistributionFile {
    pub fn from_rationals(w: &[Rational], config: Option<Value>) -> Self {
        Self { weights: w.iter().map(|x| Value::String(x.to_string())).collect(), config }
    }

    /// Weights normalized by their exact sum.
    pub fn probabilities(&self) -> Result<Vec<Rational>, FormatError> {
        let mut w = Vec::with_capacity(self.weights.len());
        for v in &self.weights {
            let text = match v {
                Value::String(s) => s.clone(),
                Value::Number(n) => n.to_string(),
                other => return Err(FormatError::Weight(other.to_string())),
            };
            let x = parse_rational(&text).ok_or_else(|| FormatError::Weight(text.clone()))?;
            w.push(x);
        }
        normalize(w)
    }
}

pub fn normalize(w: Vec<Rational>) -> Result<Vec<Rational>, FormatError> {
    if w.is_empty() || w.iter().any(|x| x < &Rational::ZERO) {
        return Err(FormatError::Weights);
    }
    let total = w.iter().fold(Rational::ZERO, |a, x| a + x);
    if total.is_zero() {
        return Err(FormatError::Weights);
    }
    Ok(w.into_iter().map(|x| x / &total).collect())
}

/// `{"k","l","Z","M","divergence","error","mode"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApproxFile {
    pub k: u32,
    pub l: u32,
    #[serde(rename = "Z")]
    pub z: String,
    #[serde(rename = "M")]
    pub m: Vec<String>,
    pub divergence: String,
    pub error: String,
    pub mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mantissa_bits: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<Value>,
}

impl ApproxFile {
    pub fn spec(&self) -> Result<PrecisionSpec, FormatError> {
        PrecisionSpec::new(self.k, self.l)
            .map_err(|_| FormatError::Field { field: "k/l", value: format!("({}, {})", self.k, self.l) })
    }

    pub fn assignment(&self) -> Result<Assignment, FormatError> {
        let parse = |field: &'static str, s: &str| {
            s.parse::<UBig>().map_err(|_| FormatError::Field { field, value: s.to_string() })
        };
        let z = parse("Z", &self.z)?;
        let m = self.m.iter().map(|s| parse("M", s)).collect::<Result<Vec<_>, _>>()?;
        Assignment::new(m, z.clone()).map_err(|_| FormatError::Field { field: "M", value: format!("sum != {z}") })
    }
}

/// `{"n","k","l","enc"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EncodingFile {
    pub n: usize,
    pub k: u32,
    pub l: u32,
    pub enc: Vec<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<Value>,
}

impl EncodingFile {
    pub fn from_encoding(enc: &LinearEncoding, config: Option<Value>) -> Self {
        let spec = enc.spec();
        Self { n: enc.n(), k: spec.k(), l: spec.l(), enc: enc.cells().to_vec(), config }
    }

    pub fn encoding(&self) -> Result<LinearEncoding, FormatError> {
        let spec = PrecisionSpec::new(self.k, self.l)
            .map_err(|_| FormatError::Field { field: "k/l", value: format!("({}, {})", self.k, self.l) })?;
        Ok(LinearEncoding::new(self.enc.clone(), self.n, spec)?)
    }
}

pub fn write_ddg1<W: Write>(enc: &LinearEncoding, mut out: W) -> Result<(), FormatError> {
    let spec = enc.spec();
    let count = u32::try_from(enc.len()).map_err(|_| FormatError::Binary("too many cells"))?;
    let n = u32::try_from(enc.n()).map_err(|_| FormatError::Binary("too many outcomes"))?;
    out.write_all(DDG1_MAGIC)?;
    for v in [n, spec.k(), spec.l(), count] {
        out.write_all(&v.to_le_bytes())?;
    }
    for c in enc.cells() {
        out.write_all(&c.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_ddg1<R: Read>(mut input: R) -> Result<LinearEncoding, FormatError> {
    let mut head = [0u8; 20];
    input.read_exact(&mut head).map_err(|_| FormatError::Binary("truncated header"))?;
    if &head[..4] != DDG1_MAGIC {
        return Err(FormatError::Binary("missing magic"));
    }
    let word = |i: usize| u32::from_le_bytes(head[4 + 4 * i..8 + 4 * i].try_into().unwrap());
    let (n, k, l, count) = (word(0), word(1), word(2), word(3));
    let mut body = Vec::new();
    input.read_to_end(&mut body)?;
    if body.len() != count as usize * 8 {
        return Err(FormatError::Binary("cell count does not match file length"));
    }
    let cells = body.chunks_exact(8).map(|c| i64::from_le_bytes(c.try_into().unwrap())).collect();
    let spec = PrecisionSpec::new(k, l).map_err(|_| FormatError::Binary("invalid k, l"))?;
    Ok(LinearEncoding::new(cells, n as usize, spec)?)
}

/// Reads either form, telling them apart by the magic.
pub fn read_encoding(bytes: &[u8]) -> Result<LinearEncoding, FormatError> {
    if bytes.starts_with(DDG1_MAGIC) {
        read_ddg1(bytes)
    } else {
        serde_json::from_slice::<EncodingFile>(bytes)?.encoding()
    }
}

/// Per-outcome histogram of a sampling run.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct CountsFile {
    pub counts: Vec<u64>,
    pub samples: u64,
    pub bits_consumed: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<Value>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisFile {
    pub n: usize,
    pub k: u32,
    pub l: u32,
    pub output_distribution: Vec<String>,
    pub expected_bits: String,
    pub entropy: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divergence: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<Value>,
}

/// `{"k","l","Z"}`; `k` and `l` become strings past `u64`, and `Z` is null
/// when it has more than [`EXACT_Z_MAX_BITS`] bits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrecisionFile {
    pub k: Value,
    pub l: Value,
    #[serde(rename = "Z")]
    pub z: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<Value>,
}

pub const EXACT_Z_MAX_BITS: u32 = 4096;

pub fn big_value(x: &UBig) -> Value {
    match u64::try_from(x) {
        Ok(v) => Value::from(v),
        Err(_) => Value::String(x.to_string()),
    }
}

pub fn rationals_to_strings(v: &[Rational]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}
