use serde_json::Value;
use sha2::{Digest, Sha256};
use std::path::Path;
use std::process::{Command, Output};
use tempfile::TempDir;

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_poincare-lab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn report(out: &Path) -> Value {
    let text = std::fs::read_to_string(out.join("report.json")).expect("report written");
    serde_json::from_str(&text).expect("report is JSON")
}

fn stage<'a>(r: &'a Value, name: &str) -> &'a Value {
    r["stages"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s["stage"] == name)
        .unwrap_or_else(|| panic!("stage {name} missing"))
}

fn assert_schema_valid(r: &Value) {
    let schema: Value =
        serde_json::from_str(include_str!("../schema/report.schema.json")).expect("schema is JSON");
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    let errors: Vec<String> = validator
        .iter_errors(r)
        .map(|e| format!("{} at {}", e, e.instance_path()))
        .collect();
    assert!(errors.is_empty(), "schema violations: {errors:#?}");
}

#[test]
fn analyze_normalizes_and_audits() {
    let dir = TempDir::new().unwrap();
    let out = run(&["analyze", "--poly", "4,-3"], dir.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = report(dir.path());
    assert_schema_valid(&r);
    let norm = &r["system"]["normalized"]["poly"]["coefficients"];
    assert_eq!(norm, &serde_json::json!(["0", "5", "1"]));
    assert_eq!(r["system"]["lambda_exact"], "5");
    let audit = &stage(&r, "analyze")["result"]["audit"];
    let flags: Vec<&str> = audit["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["flag"].as_str().unwrap())
        .collect();
    assert_eq!(flags, ["pass", "pass"]);
    assert_eq!(audit["any_violation"], false);
}

#[test]
fn chebyshev_audit_has_equality_flags() {
    let dir = TempDir::new().unwrap();
    let out = run(&["analyze", "--poly", "1,4"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let r = report(dir.path());
    let res = &stage(&r, "analyze")["result"];
    assert_eq!(res["exceptional"], "chebyshev-conjugate");
    assert!(res["audit"]["entries"]
        .as_array()
        .unwrap()
        .iter()
        .all(|e| e["flag"] == "equality"));
    assert_eq!(res["audit"]["chebyshev_consistent"], true);
}

#[test]
fn config_errors_exit_2_without_output() {
    let cases: [&[&str]; 5] = [
        &["analyze", "--poly", "1,x"],
        &["analyze", "--poly", "3"],
        &["analyze", "--poly", "1,1/2", "--fixed-point", "0"],
        &["eval", "--poly", "1,4", "--at", "nan"],
        &["frobnicate", "--poly", "1,4"],
    ];
    for args in cases {
        let dir = TempDir::new().unwrap();
        let target = dir.path().join("out");
        let out = run(args, &target);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!target.exists(), "partial output for {args:?}");
    }
}

#[test]
fn stage_failure_exits_1() {
    let dir = TempDir::new().unwrap();
    let out = run(
        &["eval", "--poly", "1,4", "--order", "32", "--at", "1e300"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let r = report(dir.path());
    assert_schema_valid(&r);
    assert_eq!(stage(&r, "eval")["status"], "failed");
}

#[test]
fn zeros_on_circle_case_is_skipped_with_warning() {
    let dir = TempDir::new().unwrap();
    let out = run(&["zeros", "--poly", "1,2", "--order", "32"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let r = report(dir.path());
    assert_schema_valid(&r);
    let z = stage(&r, "zeros");
    assert_eq!(z["status"], "skipped");
    assert!(z["reason"].as_str().unwrap().contains("not applicable"));
    assert!(r["warnings"]
        .as_array()
        .unwrap()
        .iter()
        .any(|w| w.as_str().unwrap().starts_with("zeros skipped")));
    assert!(!dir.path().join("zeros.csv").exists());
}

#[test]
fn chebyshev_pipeline_end_to_end() {
    let dir = TempDir::new().unwrap();
    let out = run(
        &["all", "--poly", "1,4", "--atoms", "20000", "--depth", "20"],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = report(dir.path());
    assert_schema_valid(&r);
    let zeta = &stage(&r, "zeta")["result"]["values"][0];
    assert_eq!(zeta["s"][0], 1.0);
    assert!((zeta["value"][0].as_f64().unwrap() - 1.0 / 24.0).abs() < 1e-6);
    let cheb = &stage(&r, "eval")["result"]["points"];
    for p in cheb.as_array().unwrap() {
        assert!(p["closed_form_relative_error"].as_f64().unwrap() < 1e-10);
    }
    assert_eq!(stage(&r, "fourier")["result"]["constancy"]["verdict"], "constant");
    assert_eq!(stage(&r, "attracting")["status"], "skipped");
    let headers = [
        ("profile_F.csv", "u,re_F,im_F"),
        ("measure.csv", "x_re,x_im,depth"),
        ("zeros.csv", "xi,multiplicity,residual,sign_verified,source"),
        ("counting.csv", "x,N_f"),
    ];
    for (file, header) in headers {
        let text = std::fs::read_to_string(dir.path().join(file)).unwrap();
        assert_eq!(text.lines().next(), Some(header));
    }
    // N_f(x) = floor(sqrt(x) / 2π) on every counting row.
    let counting = std::fs::read_to_string(dir.path().join("counting.csv")).unwrap();
    for line in counting.lines().skip(1) {
        let (x, n) = line.split_once(',').unwrap();
        let x: f64 = x.parse().unwrap();
        let want = (x.sqrt() / (2.0 * std::f64::consts::PI)).floor() as usize;
        // Rows that land exactly on a zero count it as not yet passed.
        let at_zero = ((x.sqrt() / (2.0 * std::f64::consts::PI)).fract()).abs() < 1e-12;
        if !at_zero {
            assert_eq!(n.parse::<usize>().unwrap(), want, "x = {x}");
        }
    }
}

#[test]
fn fourier_routes_agree() {
    let dir = TempDir::new().unwrap();
    let out = run(
        &["fourier", "--poly", "1,5", "--order", "48", "--atoms", "200000"],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = report(dir.path());
    assert_schema_valid(&r);
    let f = &stage(&r, "fourier")["result"];
    assert_eq!(f["constancy"]["verdict"], "non-constant");
    let cmp = f["comparison"].as_array().unwrap();
    assert_eq!(cmp.len(), 7);
    for c in cmp {
        assert!(c["ratio"].as_f64().unwrap() <= 3.0, "{c}");
    }
}

fn digest_dir(dir: &Path) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let path = e.unwrap().path();
            let hex = format!("{:x}", Sha256::digest(std::fs::read(&path).unwrap()));
            (path.file_name().unwrap().to_string_lossy().into_owned(), hex)
        })
        .collect();
    out.sort();
    out
}

#[test]
fn identical_seeds_give_identical_bytes() {
    let args = [
        "all", "--poly", "1,5", "--order", "40", "--atoms", "5000", "--seed", "7", "--bound", "1e4",
    ];
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    assert_eq!(run(&args, a.path()).status.code(), Some(0));
    assert_eq!(run(&args, b.path()).status.code(), Some(0));
    let (da, db) = (digest_dir(a.path()), digest_dir(b.path()));
    assert_eq!(da.len(), 5);
    assert_eq!(da, db);
    let mut other = args.to_vec();
    other[8] = "8";
    let c = TempDir::new().unwrap();
    assert_eq!(run(&other, c.path()).status.code(), Some(0));
    assert_ne!(digest_dir(c.path()), da, "seed must matter");
}

#[test]
fn schema_rejects_malformed_reports() {
    let dir = TempDir::new().unwrap();
    assert_eq!(
        run(&["analyze", "--poly", "1,5"], dir.path()).status.code(),
        Some(0)
    );
    let good = report(dir.path());
    let schema: Value = serde_json::from_str(include_str!("../schema/report.schema.json")).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    assert!(validator.is_valid(&good));
    let mut missing = good.clone();
    missing.as_object_mut().unwrap().remove("stages");
    assert!(!validator.is_valid(&missing));
    let mut bad_status = good.clone();
    bad_status["stages"][0]["status"] = "maybe".into();
    assert!(!validator.is_valid(&bad_status));
    let mut ok_with_reason = good;
    ok_with_reason["stages"][0]["reason"] = "stray".into();
    assert!(!validator.is_valid(&ok_with_reason));
}
