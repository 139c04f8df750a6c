use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use optsample::formats::{AnalysisFile, ApproxFile, CountsFile, PrecisionFile};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_optsample"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Vec<u8> {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn approx_build_analyze_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let targets = [
        r#"{"weights": ["3/10", "7/10"]}"#,
        r#"{"weights": [1, 2, 3, 4, 5]}"#,
        r#"{"weights": ["1/3", "1/3", "1/3"]}"#,
        r#"{"weights": [0, 7, "0.25", 11]}"#,
    ];
    for (i, t) in targets.iter().enumerate() {
        let dist = write(d, &format!("p{i}.json"), t);
        for (div, bits) in [("tv", "4"), ("pearson-chi2", "6"), ("hellinger", "5"), ("alpha:1/3", "3")] {
            let approx = d.join(format!("a{i}.json"));
            let enc = d.join(format!("e{i}.bin"));
            ok(&["approx", "--dist", s(&dist), "--bits", bits, "--divergence", div, "--out", s(&approx)]);
            ok(&["build", "--approx", s(&approx), "--format", "binary", "--out", s(&enc)]);
            let report: AnalysisFile =
                serde_json::from_slice(&ok(&["analyze", "--enc", s(&enc), "--dist", s(&dist), "--divergence", div]))
                    .unwrap();
            let a: ApproxFile = serde_json::from_slice(&std::fs::read(&approx).unwrap()).unwrap();
            assert_eq!(report.error.as_deref(), Some(a.error.as_str()), "{t} {div}");
            let z = &a.z;
            let want: Vec<String> = a
                .m
                .iter()
                .map(|m| optsample_core::numsys::parse_rational(&format!("{m}/{z}")).unwrap().to_string())
                .collect();
            assert_eq!(report.output_distribution, want);
        }
    }
}

#[test]
fn spec_examples() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let p = write(d, "p.json", r#"{"weights": ["3/10", "7/10"]}"#);
    let a: ApproxFile = serde_json::from_slice(&ok(&["approx", "--dist", s(&p), "--bits", "5"])).unwrap();
    assert_eq!((a.k, a.l, a.z.as_str(), a.error.as_str()), (5, 1, "30", "0"));

    let t = write(d, "t.json", r#"{"weights": ["1/3", "2/3"]}"#);
    let a: ApproxFile =
        serde_json::from_slice(&ok(&["approx", "--dist", s(&t), "--bits", "3", "--class", "dyadic"])).unwrap();
    assert_eq!((a.m.clone(), a.z.as_str()), (vec!["3".to_string(), "5".to_string()], "8"));

    let e: PrecisionFile = serde_json::from_slice(&ok(&["exact-precision", "--dist", s(&p)])).unwrap();
    assert_eq!((e.k, e.l, e.z.as_deref()), (Value::from(5), Value::from(1), Some("30")));

    let csv = String::from_utf8(ok(&["compare", "--dist", s(&p), "--bits", "2"])).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().filter(|l| !l.starts_with('#')).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0], ["method", "k", "l", "Z", "divergence", "error", "expected_bits"]);
    let find = |m: &str| rows.iter().find(|r| r[0] == m).unwrap().clone();
    assert_eq!(find("inversion")[5], "1/5");
    assert_eq!(find("optimal-dyadic")[5], "1/20");

    let enc = write(d, "e.json", r#"{"n": 3, "k": 2, "l": 2, "enc": [2, 6, 4, 5, -3, -2, -1]}"#);
    let r: AnalysisFile = serde_json::from_slice(&ok(&["analyze", "--enc", s(&enc)])).unwrap();
    assert_eq!(r.output_distribution, ["1/2", "1/4", "1/4"]);
    assert_eq!(r.expected_bits, "3/2");
    assert!(r.entropy.starts_with("1.5e0"), "{}", r.entropy);
}

#[test]
fn binomial_table_row() {
    let dir = tempfile::tempdir().unwrap();
    let dist = dir.path().join("b.json");
    ok(&["dist", "--out", s(&dist), "binomial", "--n", "50", "--p", "61/500"]);
    let a: ApproxFile = serde_json::from_slice(&ok(&["approx", "--dist", s(&dist), "--bits", "16"])).unwrap();
    assert_eq!(a.l, 0);
    let tv = optsample_core::numsys::parse_rational(&a.error).unwrap().to_f64().value();
    assert!((2.0 * tv - 6.33e-5).abs() < 0.01 * 6.33e-5, "L1 = {}", 2.0 * tv);
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let p = write(d, "p.json", r#"{"weights": [5, 9, 1, 30]}"#);
    let approx = d.join("a.json");
    ok(&["approx", "--dist", s(&p), "--bits", "7", "--out", s(&approx)]);
    let enc = d.join("e.json");
    ok(&["build", "--approx", s(&approx), "--out", s(&enc)]);
    for args in [
        vec!["sample", "--enc", s(&enc), "--num", "2000", "--seed", "17"],
        vec!["sample", "--enc", s(&enc), "--num", "2000", "--seed", "17", "--format", "counts"],
        vec!["compare", "--dist", s(&p), "--bits", "6", "--divergence", "hellinger"],
        vec!["sweep", "--dist", s(&p), "--k-min", "3", "--k-max", "6", "--divergences", "tv,forward-kl"],
    ] {
        assert_eq!(ok(&args), ok(&args), "{args:?}");
    }
    let c: CountsFile =
        serde_json::from_slice(&ok(&["sample", "--enc", s(&enc), "--num", "500", "--format", "counts"])).unwrap();
    assert_eq!(c.counts.iter().sum::<u64>(), 500);
    assert_eq!(c.config.unwrap()["seed"], 0);
    let stream = String::from_utf8(ok(&["sample", "--enc", s(&enc), "--num", "50", "--seed", "3"])).unwrap();
    let mut lines = stream.lines();
    assert!(lines.next().unwrap().starts_with("# config "));
    assert_eq!(lines.filter(|l| l.parse::<usize>().unwrap() < 4).count(), 50);
}

#[test]
fn sweep_layout() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let low = write(d, "low.json", r#"{"weights": [1, 30]}"#);
    let high = write(d, "high.json", r#"{"weights": [1, 1, 1, 1, 1]}"#);
    let csv = String::from_utf8(ok(&[
        "sweep", "--dist", s(&high), s(&low), "--k-min", "2", "--k-max", "5", "--divergences", "tv,hellinger",
    ]))
    .unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows[0], "target,entropy,entropy_bucket,divergence,metric,k2,k3,k4,k5");
    assert_eq!(rows.len(), 1 + 2 * 2 * 2);
    // lower entropy first
    assert!(rows[1].contains("low.json"));
    assert!(rows[8].contains("high.json"));
}

#[test]
fn failures_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let p = write(d, "p.json", r#"{"weights": ["3/10", "7/10"]}"#);
    let bad = write(d, "bad.json", r#"{"weights": ["x"]}"#);

    let out = run(&["approx", "--bits", "3"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["approx", "--dist", s(&bad), "--bits", "3"]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "format");
    let out = run(&["approx", "--dist", s(&p), "--bits", "3", "--divergence", "nope"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["approx", "--dist", s(&p), "--bits", "3", "--divergence", "forward-kl", "--mode", "exact"]);
    assert_eq!(out.status.code(), Some(2));
    let enc = write(d, "e.json", r#"{"n": 2, "k": 1, "l": 1, "enc": [2, 9, -1, -2]}"#);
    assert_eq!(run(&["analyze", "--enc", s(&enc)]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn order_budget_variable() {
    let dir = tempfile::tempdir().unwrap();
    // ord_1000003(2) needs factors of 1000002 = 2 * 3 * 166667
    let p = write(dir.path(), "p.json", r#"{"weights": ["1/1000003", "1000002/1000003"]}"#);
    let out = bin().args(["exact-precision", "--dist", s(&p)]).env("OPTSAMPLE_ORDER_BUDGET", "10").output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stdout));
    let out = bin().args(["exact-precision", "--dist", s(&p)]).env("OPTSAMPLE_ORDER_BUDGET", "lots").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin().args(["exact-precision", "--dist", s(&p)]).output().unwrap();
    assert!(out.status.success());
    let e: PrecisionFile = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(e.l, Value::from(0));
    assert!(e.z.is_none() || e.k.as_u64().unwrap() <= 4096);
}
