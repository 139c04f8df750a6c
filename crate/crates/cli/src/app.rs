//! The `optsample` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 domain error (with a JSON error
//! object on stderr).

use std::ffi::OsString;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use optsample_core::divergence::divergence_between;
use optsample_core::numsys::{minimal_exact_precision, parse_rational};
use optsample_core::numsys::DEFAULT_ORDER_BUDGET;
use optsample_core::runtime::sample_counts;
use optsample_core::{
    analyze, EvalContext, EvalMode, GeneratorKind, PrecisionClass, Rational, SplitMix64Source,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::dists;
use crate::formats::{
    big_value, rationals_to_strings, read_encoding, write_ddg1, AnalysisFile, ApproxFile, CountsFile,
    DistributionFile, EncodingFile, PrecisionFile, EXACT_Z_MAX_BITS,
};
use crate::pipeline::{self, closest_approx_par};

pub const ORDER_BUDGET_VAR: &str = "OPTSAMPLE_ORDER_BUDGET";

#[derive(Debug, Parser)]
#[command(name = "optsample", version, about = "Closest-approximation distributions and entropy-optimal samplers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closest approximation of a distribution at `--bits` precision.
    Approx(ApproxArgs),
    /// Build the sampler encoding for an approximation.
    Build(BuildArgs),
    /// Draw samples from an encoding.
    Sample(SampleArgs),
    /// Exact output distribution, expected bits and entropy of an encoding.
    Analyze(AnalyzeArgs),
    /// Smallest (k, l) that samples a distribution exactly.
    ExactPrecision(ExactArgs),
    /// Optimal sampler against inversion and rejection sampling (CSV).
    Compare(CompareArgs),
    /// Optimal error and expected bits over a range of k (CSV).
    Sweep(SweepArgs),
    /// Write an exact binomial or hypergeometric weights file.
    Dist(DistArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Mode {
    Exact,
    Float,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Class {
    All,
    Dyadic,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum EncFormat {
    Json,
    Binary,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SampleFormat {
    Stream,
    Counts,
}

#[derive(Debug, Clone, Args, Serialize)]
struct DivergenceArgs {
    /// tv, hellinger, pearson-chi2, triangular, reverse-kl, forward-kl,
    /// alpha (with --alpha) or alpha:<rational>.
    #[arg(long, default_value = "tv")]
    divergence: String,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<String>,
    /// Defaults to exact when the divergence allows it.
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    mode: Option<Mode>,
    #[arg(long, default_value_t = optsample_core::divergence::DEFAULT_MANTISSA_BITS)]
    mantissa_bits: usize,
}

#[derive(Debug, Args, Serialize)]
struct ApproxArgs {
    #[arg(long)]
    dist: PathBuf,
    #[arg(long)]
    bits: u32,
    #[command(flatten)]
    #[serde(flatten)]
    div: DivergenceArgs,
    #[arg(long, value_enum, default_value = "all")]
    class: Class,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct BuildArgs {
    /// ApproxResult JSON written by `approx`.
    #[arg(long)]
    approx: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: EncFormat,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct SampleArgs {
    /// Encoding in JSON or DDG1 binary form.
    #[arg(long)]
    enc: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    num: u64,
    #[arg(long, value_enum, default_value = "stream")]
    format: SampleFormat,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct AnalyzeArgs {
    #[arg(long)]
    enc: PathBuf,
    /// Optional target; adds the divergence of the output from it.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    dist: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    div: DivergenceArgs,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct ExactArgs {
    #[arg(long)]
    dist: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct CompareArgs {
    #[arg(long)]
    dist: PathBuf,
    #[arg(long)]
    bits: u32,
    #[command(flatten)]
    #[serde(flatten)]
    div: DivergenceArgs,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct SweepArgs {
    /// One or more distribution files.
    #[arg(long, required = true, num_args = 1..)]
    dist: Vec<PathBuf>,
    #[arg(long, default_value_t = 4)]
    k_min: u32,
    #[arg(long, default_value_t = 16)]
    k_max: u32,
    /// Comma-separated divergence names.
    #[arg(long, default_value = "tv", value_delimiter = ',')]
    divergences: Vec<String>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    mode: Option<Mode>,
    #[arg(long, default_value_t = optsample_core::divergence::DEFAULT_MANTISSA_BITS)]
    mantissa_bits: usize,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct DistArgs {
    #[command(subcommand)]
    family: Family,
    #[arg(long, global = true)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "family", rename_all = "lowercase")]
enum Family {
    Binomial {
        #[arg(long)]
        n: u64,
        /// Success probability, e.g. 61/500.
        #[arg(long)]
        p: String,
    },
    Hypergeometric {
        #[arg(long)]
        population: u64,
        #[arg(long)]
        successes: u64,
        #[arg(long)]
        draws: u64,
    },
}

/// A failed run: usage problems exit with 1, everything else with 2.
#[derive(Debug)]
pub enum AppError {
    Usage(String),
    Domain { kind: &'static str, message: String },
}

impl AppError {
    fn domain(kind: &'static str, e: impl std::fmt::Display) -> Self {
        AppError::Domain { kind, message: e.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Usage(_) => 1,
            AppError::Domain { .. } => 2,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            AppError::Usage(m) => json!({"error": {"kind": "usage", "message": m}}),
            AppError::Domain { kind, message } => json!({"error": {"kind": kind, "message": message}}),
        }
    }
}

macro_rules! domain_from {
    ($($t:ty => $kind:literal),* $(,)?) => {
        $(impl From<$t> for AppError {
            fn from(e: $t) -> Self {
                AppError::domain($kind, e)
            }
        })*
    };
}

domain_from! {
    crate::formats::FormatError => "format",
    crate::pipeline::PipelineError => "optimize",
    crate::dists::DistError => "distribution",
    optsample_core::optimize::OptimizeError => "optimize",
    optsample_core::DdgError => "ddg",
    optsample_core::NumSysError => "numsys",
    optsample_core::divergence::DivergenceError => "divergence",
    optsample_core::NeedMoreBits => "runtime",
    serde_json::Error => "format",
}

type Result<T> = std::result::Result<T, AppError>;

/// Parses `args` (program name first) and runs the command, reporting
/// failures on stderr. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match execute(cli, &mut out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = out.flush();
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}

fn order_budget() -> Result<u64> {
    match std::env::var(ORDER_BUDGET_VAR) {
        Ok(v) => v.trim().parse().map_err(|_| AppError::Usage(format!("{ORDER_BUDGET_VAR} must be an integer, got {v:?}"))),
        Err(_) => Ok(DEFAULT_ORDER_BUDGET),
    }
}

fn io_err(path: &Path, e: io::Error) -> AppError {
    AppError::domain("io", format!("{}: {e}", path.display()))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| io_err(path, e))
}

fn read_dist(path: &Path) -> Result<Vec<Rational>> {
    let file: DistributionFile = serde_json::from_slice(&read_bytes(path)?)?;
    Ok(file.probabilities()?)
}

/// Writes to `--out` when given, otherwise to stdout.
fn emit(path: Option<&Path>, stdout: &mut dyn Write, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| io_err(p, e)),
        None => stdout.write_all(bytes).map_err(|e| AppError::domain("io", e)),
    }
}

fn to_json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(v)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn config<T: Serialize>(subcommand: &str, args: &T) -> Result<Value> {
    let mut v = serde_json::to_value(args)?;
    if let Value::Object(map) = &mut v {
        map.insert("subcommand".into(), Value::String(subcommand.into()));
    }
    Ok(v)
}

impl DivergenceArgs {
    fn kind(&self) -> Result<GeneratorKind> {
        let name = match (&self.alpha, self.divergence.as_str()) {
            (Some(a), "alpha") => format!("alpha:{a}"),
            (Some(_), _) => return Err(AppError::Usage("--alpha requires --divergence alpha".into())),
            (None, "alpha") => return Err(AppError::Usage("--divergence alpha requires --alpha".into())),
            (None, other) => other.to_string(),
        };
        GeneratorKind::parse(&name).map_err(|e| AppError::Usage(e.to_string()))
    }

    fn context(&self, kind: &GeneratorKind) -> EvalContext {
        context_for(self.mode, self.mantissa_bits, kind)
    }
}

fn context_for(mode: Option<Mode>, mantissa_bits: usize, kind: &GeneratorKind) -> EvalContext {
    match mode {
        Some(Mode::Exact) => EvalContext::exact(),
        Some(Mode::Float) => EvalContext::float(mantissa_bits),
        None if kind.is_rational() => EvalContext::exact(),
        None => EvalContext::float(mantissa_bits),
    }
}

fn mode_name(ctx: &EvalContext) -> &'static str {
    match ctx.mode {
        EvalMode::Exact => "exact",
        EvalMode::Float => "float",
    }
}

fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Approx(a) => cmd_approx(&a, stdout),
        Command::Build(a) => cmd_build(&a, stdout),
        Command::Sample(a) => cmd_sample(&a, stdout),
        Command::Analyze(a) => cmd_analyze(&a, stdout),
        Command::ExactPrecision(a) => cmd_exact_precision(&a, stdout),
        Command::Compare(a) => cmd_compare(&a, stdout),
        Command::Sweep(a) => cmd_sweep(&a, stdout),
        Command::Dist(a) => cmd_dist(&a, stdout),
    }
}

fn cmd_approx(a: &ApproxArgs, stdout: &mut dyn Write) -> Result<()> {
    if a.bits == 0 {
        return Err(AppError::Usage("--bits must be at least 1".into()));
    }
    let p = read_dist(&a.dist)?;
    let kind = a.div.kind()?;
    let ctx = a.div.context(&kind);
    let class = match a.class {
        Class::All => PrecisionClass::AllEntropyOptimal,
        Class::Dyadic => PrecisionClass::BoundedDyadic,
    };
    let best = closest_approx_par(&p, a.bits, &kind, &ctx, class)?;
    let file = ApproxFile {
        k: best.spec.k(),
        l: best.spec.l(),
        z: best.spec.z().to_string(),
        m: best.assignment.numerators().iter().map(|x| x.to_string()).collect(),
        divergence: kind.name(),
        error: best.error.to_string(),
        mode: mode_name(&ctx).into(),
        mantissa_bits: (ctx.mode == EvalMode::Float).then_some(ctx.mantissa_bits),
        config: Some(config("approx", a)?),
    };
    let bytes = to_json_bytes(&file)?;
    match &a.out {
        Some(path) => {
            emit(Some(path), stdout, &bytes)?;
            writeln!(stdout, "k={} l={} Z={} error={}", file.k, file.l, file.z, file.error)
                .map_err(|e| AppError::domain("io", e))
        }
        None => emit(None, stdout, &bytes),
    }
}

fn cmd_build(a: &BuildArgs, stdout: &mut dyn Write) -> Result<()> {
    let file: ApproxFile = serde_json::from_slice(&read_bytes(&a.approx)?)?;
    let spec = file.spec()?;
    let m = file.assignment()?;
    let enc = optsample_core::build_encoding(&m, spec)?;
    let bytes = match a.format {
        EncFormat::Json => to_json_bytes(&EncodingFile::from_encoding(&enc, Some(config("build", a)?)))?,
        EncFormat::Binary => {
            let mut buf = Vec::new();
            write_ddg1(&enc, &mut buf)?;
            buf
        }
    };
    emit(a.out.as_deref(), stdout, &bytes)
}

fn cmd_sample(a: &SampleArgs, stdout: &mut dyn Write) -> Result<()> {
    let enc = read_encoding(&read_bytes(&a.enc)?)?;
    let mut src = SplitMix64Source::new(a.seed);
    let bytes = match a.format {
        SampleFormat::Counts => {
            let counts = sample_counts(&enc, &mut src, a.num)?;
            let file = CountsFile {
                counts,
                samples: a.num,
                bits_consumed: optsample_core::BitSource::bits_consumed(&src),
                seed: a.seed,
                config: Some(config("sample", a)?),
            };
            to_json_bytes(&file)?
        }
        SampleFormat::Stream => {
            let mut buf = Vec::with_capacity(a.num as usize * 3 + 128);
            writeln!(buf, "# config {}", config("sample", a)?).expect("write to vec");
            for _ in 0..a.num {
                let x = optsample_core::sample_encoding(&enc, &mut src)?;
                writeln!(buf, "{x}").expect("write to vec");
            }
            buf
        }
    };
    match &a.out {
        Some(_) => emit(a.out.as_deref(), stdout, &bytes),
        None => {
            let mut w = BufWriter::new(stdout);
            w.write_all(&bytes).and_then(|_| w.flush()).map_err(|e| AppError::domain("io", e))
        }
    }
}

fn cmd_analyze(a: &AnalyzeArgs, stdout: &mut dyn Write) -> Result<()> {
    let enc = read_encoding(&read_bytes(&a.enc)?)?;
    let report = analyze(&enc)?;
    let (divergence, error) = match &a.dist {
        Some(path) => {
            let p = read_dist(path)?;
            if p.len() != enc.n() {
                return Err(AppError::domain("format", format!("target has {} outcomes, encoding has {}", p.len(), enc.n())));
            }
            let kind = a.div.kind()?;
            let ctx = a.div.context(&kind);
            let err = divergence_between(&p, &report.output_distribution, &kind, &ctx)?;
            (Some(kind.name()), Some(err.to_string()))
        }
        None => (None, None),
    };
    let spec = enc.spec();
    let file = AnalysisFile {
        n: enc.n(),
        k: spec.k(),
        l: spec.l(),
        output_distribution: rationals_to_strings(&report.output_distribution),
        expected_bits: report.expected_bits.to_string(),
        entropy: optsample_core::extreal::float_to_decimal(&report.entropy, 30),
        divergence,
        error,
        config: Some(config("analyze", a)?),
    };
    emit(a.out.as_deref(), stdout, &to_json_bytes(&file)?)
}

fn cmd_exact_precision(a: &ExactArgs, stdout: &mut dyn Write) -> Result<()> {
    let p = read_dist(&a.dist)?;
    let exact = minimal_exact_precision(&p, order_budget()?)?;
    let file = PrecisionFile {
        k: big_value(&exact.k),
        l: big_value(&exact.l),
        z: exact.z(EXACT_Z_MAX_BITS).map(|z| z.to_string()),
        config: Some(config("exact-precision", a)?),
    };
    emit(a.out.as_deref(), stdout, &to_json_bytes(&file)?)
}

fn csv_config_line(v: &Value) -> String {
    format!("# config {v}\n")
}

fn cmd_compare(a: &CompareArgs, stdout: &mut dyn Write) -> Result<()> {
    if a.bits == 0 {
        return Err(AppError::Usage("--bits must be at least 1".into()));
    }
    let p = read_dist(&a.dist)?;
    let kind = a.div.kind()?;
    let ctx = a.div.context(&kind);
    let rows = pipeline::compare(&p, a.bits, &kind, &ctx)?;
    let mut text = csv_config_line(&config("compare", a)?);
    text.push_str("method,k,l,Z,divergence,error,expected_bits\n");
    for r in rows {
        let l = r.l.map(|l| l.to_string()).unwrap_or_default();
        text.push_str(&format!("{},{},{},{},{},{},{}\n", r.method, r.k, l, r.z, kind.name(), r.error, r.expected_bits));
    }
    emit(a.out.as_deref(), stdout, text.as_bytes())
}

fn cmd_sweep(a: &SweepArgs, stdout: &mut dyn Write) -> Result<()> {
    if a.k_min == 0 || a.k_min > a.k_max {
        return Err(AppError::Usage("need 1 <= --k-min <= --k-max".into()));
    }
    let targets = a.dist.iter().map(|p| read_dist(p)).collect::<Result<Vec<_>>>()?;
    let kinds = a
        .divergences
        .iter()
        .map(|d| GeneratorKind::parse(d).map_err(|e| AppError::Usage(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let ks: Vec<u32> = (a.k_min..=a.k_max).collect();
    let cells = pipeline::sweep(&targets, &ks, &kinds, |kind| context_for(a.mode, a.mantissa_bits, kind))?;

    let mut text = csv_config_line(&config("sweep", a)?);
    text.push_str("target,entropy,entropy_bucket,divergence,metric");
    for k in &ks {
        text.push_str(&format!(",k{k}"));
    }
    text.push('\n');
    // rows sorted by target entropy, then divergence, error before bits
    let mut order: Vec<(f64, usize)> = targets.iter().enumerate().map(|(i, p)| (pipeline::entropy_f64(p), i)).collect();
    order.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    for (h, t) in order {
        for (g, kind) in kinds.iter().enumerate() {
            let row: Vec<_> = cells.iter().filter(|c| c.target == t && c.kind == g).collect();
            for metric in ["error", "expected_bits"] {
                text.push_str(&format!("{},{h:.6},{},{},{metric}", a.dist[t].display(), h.floor() as i64, kind.name()));
                for c in &row {
                    let v = match metric {
                        "error" => c.error.to_f64(),
                        _ => c.expected_bits.to_f64().value(),
                    };
                    text.push_str(&format!(",{v:.10e}"));
                }
                text.push('\n');
            }
        }
    }
    emit(a.out.as_deref(), stdout, text.as_bytes())
}

fn cmd_dist(a: &DistArgs, stdout: &mut dyn Write) -> Result<()> {
    let w = match &a.family {
        Family::Binomial { n, p } => {
            let p = parse_rational(p).ok_or_else(|| AppError::Usage(format!("invalid probability {p:?}")))?;
            dists::binomial(*n, &p)?
        }
        Family::Hypergeometric { population, successes, draws } => {
            dists::hypergeometric(*population, *successes, *draws)?
        }
    };
    let file = DistributionFile::from_rationals(&w, Some(config("dist", a)?));
    emit(a.out.as_deref(), stdout, &to_json_bytes(&file)?)
}
