use std::path::Path;
use std::process::Command;

use clap::Parser;
use ergokit_cli::catalog::{Catalog, CATALOG_ENV};
use ergokit_cli::{execute, Cli};
use serde_json::Value;

fn ergokit(out: &Path, args: &[&str]) -> (i32, Value) {
    let status = Command::new(env!("CARGO_BIN_EXE_ergokit"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove(CATALOG_ENV)
        .output()
        .expect("binary runs");
    let manifest = std::fs::read(out.join("manifest.json")).expect("manifest is always written");
    (status.status.code().unwrap(), serde_json::from_slice(&manifest).unwrap())
}

fn cli(line: &str) -> Cli {
    Cli::try_parse_from(std::iter::once("ergokit").chain(line.split_whitespace())).unwrap()
}

#[test]
fn builtin_catalog_has_the_examples() {
    let c = Catalog::builtin();
    for s in ["shear", "full_shift_2", "golden_mean", "doubling", "interval_255"] {
        assert!(c.system(s).is_ok(), "{s}");
    }
    let full2 = c.system("full_shift_2").unwrap();
    assert!(c.observable("cyl1", full2).is_ok());
    assert!(c.observable("disp", full2).is_err());
}

#[test]
fn catalog_rejects_bad_input() {
    let base = r#"{"schema_version": 1, "systems": [SYS], "observables": []}"#;
    let ok = base.replace("SYS", r#"{"name": "t", "kind": "translation", "params": {"v": [0.5]}}"#);
    assert!(Catalog::parse(&ok, "inline").is_ok());
    let dup = base.replace(
        "SYS",
        r#"{"name": "t", "kind": "doubling"}, {"name": "t", "kind": "doubling"}"#,
    );
    assert!(Catalog::parse(&dup, "inline").unwrap_err().0.contains("duplicate"));
    let unknown = base.replace("SYS", r#"{"name": "t", "kind": "baker"}"#);
    assert!(Catalog::parse(&unknown, "inline").is_err());
    let version = ok.replace("\"schema_version\": 1", "\"schema_version\": 9");
    assert!(Catalog::parse(&version, "inline").is_err());
}

#[test]
fn entropy_matches_counting_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let (code, m) = ergokit(dir.path(), &["entropy", "--system", "full_shift_2", "--eps", "2^-3..2^-6", "--n", "6..14"]);
    assert_eq!(code, 0);
    let h = m["results"]["estimate"].as_f64().unwrap();
    assert!((h / 2f64.ln() - 1.0).abs() < 0.02, "{h}");
    let files: Vec<&str> = m["files"].as_array().unwrap().iter().map(|f| f["name"].as_str().unwrap()).collect();
    assert_eq!(files, ["entropy_table.csv", "entropy_fits.csv"]);
    let table = std::fs::read_to_string(dir.path().join("entropy_table.csv")).unwrap();
    assert_eq!(table.lines().next(), Some("eps,n,log_sum"));
    assert_eq!(table.lines().count(), 1 + 4 * 9);
}

#[test]
fn exit_codes_and_failure_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let (code, m) = ergokit(dir.path(), &["entropy", "--system", "nope"]);
    assert_eq!(code, 2);
    assert_eq!(m["status"], "failed");
    assert!(m["failure"].as_str().unwrap().contains("unknown system"));

    let (code, _) = ergokit(dir.path(), &["entropy", "--system", "full_shift_2", "--eps", "0.1..0.2"]);
    assert_eq!(code, 2);

    // Translations have no shadowing oracle.
    let (code, m) = ergokit(dir.path(), &["shadow", "--system", "translation", "--count", "2"]);
    assert_eq!(code, 3, "{m}");
    let (code, _) = ergokit(dir.path(), &["rotnum", "--system", "full_shift_2"]);
    assert_eq!(code, 3);

    // A Dirac μ1 has a single typical word, so the certificate fails.
    let (code, m) = ergokit(
        dir.path(),
        &["certify", "--system", "full_shift_2", "--obs", "cyl1", "--psi", "zero", "--mu1", "dirac:0"],
    );
    assert_eq!(code, 4);
    assert_eq!(m["status"], "certificate_failed");
    assert!(dir.path().join("certificate.csv").exists());
}

#[test]
fn certify_passes_on_the_full_shift() {
    let dir = tempfile::tempdir().unwrap();
    let (code, m) = ergokit(dir.path(), &["certify", "--system", "full_shift_2", "--obs", "cyl1", "--psi", "zero"]);
    assert_eq!(code, 0);
    let c = &m["results"]["certificate"];
    assert!(c["rate"].as_f64().unwrap() >= 0.9 * 2f64.ln() - 0.09);
}

#[test]
fn wild_stream_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let (code, m) = ergokit(
        dir.path(),
        &["wild", "--system", "full_shift_2", "--obs", "cyl1", "--delta", "0.1,0.9", "--depth", "4"],
    );
    assert_eq!(code, 0);
    assert_eq!(m["results"]["pass"], true);
    let stream = std::fs::read_to_string(dir.path().join("stream.txt")).unwrap();
    assert_eq!(stream.trim_end().len(), 1_000_000);
    assert!(stream.trim_end().bytes().all(|b| b == b'0' || b == b'1'));
    // Running averages of the written stream, over the reported window, reach
    // both ends of the interval.
    let from = m["results"]["extremes"]["from"].as_u64().unwrap() as usize;
    let mut ones = 0usize;
    let (mut hi, mut lo) = (0f64, 1f64);
    for (t, b) in stream.trim_end().bytes().enumerate() {
        ones += usize::from(b == b'1');
        if t + 1 >= from {
            let a = ones as f64 / (t + 1) as f64;
            hi = hi.max(a);
            lo = lo.min(a);
        }
    }
    assert!(hi >= 0.88 && lo <= 0.12, "{lo} {hi}");
    assert!((hi - m["results"]["extremes"]["lim_sup"].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn emit_flags_drop_files_but_keep_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let (code, m) = ergokit(dir.path(), &["--no-svg", "--no-csv", "rotset", "--system", "translation", "--seeds", "4", "--n", "1000"]);
    assert_eq!(code, 0);
    assert!(m["files"].as_array().unwrap().is_empty());
    assert!(!dir.path().join("hull.svg").exists());
}

#[test]
fn catalog_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cat = dir.path().join("cat.json");
    std::fs::write(
        &cat,
        r#"{"schema_version": 1, "systems": [{"name": "half", "kind": "translation", "params": {"v": [0.5]}}], "observables": []}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_ergokit"))
        .args(["--out", out.to_str().unwrap(), "rotnum", "--system", "half", "--n", "1000"])
        .env(CATALOG_ENV, &cat)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let m: Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["results"]["value"], 0.5);
    assert_eq!(m["catalog"], cat.display().to_string());
}

#[test]
fn repeated_runs_are_byte_identical() {
    for line in [
        "shadow --system golden_mean --delta 2^-6 --count 50 --seed 2",
        "glue --system doubling --segment 0.1:5 --segment 0.7:5 --net-delta 2^-4",
        "pointwise --system shear --point 0.1,0.2 --horizon 20000",
    ] {
        let c = cli(line);
        let (a, code) = execute(&c);
        assert_eq!(code, 0, "{line}");
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let (b, _) = pool.install(|| execute(&c));
        assert_eq!(a, b, "{line}");
    }
}

#[test]
fn params_are_recorded() {
    let (artifacts, _) = execute(&cli("net --system doubling --delta 2^-3"));
    let m: Value = serde_json::from_slice(&artifacts.last().unwrap().bytes).unwrap();
    assert_eq!(m["command"], "net");
    assert_eq!(m["params"]["delta"], "2^-3");
    assert_eq!(m["params"]["system"], "doubling");
}
