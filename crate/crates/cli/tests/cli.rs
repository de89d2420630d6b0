use std::process::Command;

use overcon_cli::run_with;
use serde_json::Value;

fn run(args: &[&str]) -> (i32, Value, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("overcon").chain(args.iter().copied());
    let code = run_with(argv, &mut out, &mut err);
    let report = if out.is_empty() { Value::Null } else { serde_json::from_slice(&out).expect("valid JSON") };
    (code, report, String::from_utf8(err).expect("utf-8"))
}

/// Faces of `[0,1]^g` with `k` open coordinates: `C(g,k) 2^(g−k)`.
fn faces_with_open(g: u32, k: u32) -> u64 {
    let binom = (0..k).fold(1u64, |acc, i| acc * (g - i) as u64 / (i + 1) as u64);
    binom << (g - k)
}

#[test]
fn strata_census_for_two_split_primes() {
    let (code, r, _) = run(&["strata", "enumerate", "--profile", "p=3;f=1,1"]);
    assert_eq!(code, 0);
    assert_eq!(r["schema"], "1");
    assert_eq!(r["count"], 9);
    assert_eq!(r["strata"].as_array().unwrap().len(), 9);
    assert_eq!(r["profile"], serde_json::json!({"p": 3, "f": [1, 1]}));
}

#[test]
fn strata_filters() {
    for k in 0..=3u32 {
        let (code, r, _) = run(&["strata", "enumerate", "--profile", "p=5;f=2,1", "--codim", &k.to_string()]);
        assert_eq!(code, 0);
        assert_eq!(r["count"].as_u64().unwrap(), faces_with_open(3, k), "codim {k}");
        assert!(r["strata"].as_array().unwrap().iter().all(|s| s["codim"] == k));
    }
    // with f = 1 per prime, étale means a zero coordinate
    let (_, r, _) = run(&["strata", "enumerate", "--profile", "p=3;f=1,1,1", "--nowhere-etale"]);
    assert_eq!(r["count"], 8);
    let (_, r, _) = run(&["strata", "enumerate", "--profile", "p=3;f=1", "--codim", "1"]);
    assert_eq!(r["strata"][0]["badness"], "good");
    assert_eq!(r["strata"][0]["beta0"], "0/0");
}

#[test]
fn region_membership() {
    let point = r#"{"deg":{"0/0":"1/2","0/1":"0","1/0":"1"}}"#;
    let (code, r, _) = run(&["regions", "check", "--profile", "p=3;f=2,1", "--point", point, "--region", "sigma"]);
    assert_eq!(code, 0);
    assert_eq!(r["membership"], "in");
    assert_eq!(r["case"], "bad-uniform");
    let (_, r, _) = run(&["regions", "check", "--profile", "p=3;f=2,1", "--point", point, "--region", "vcan"]);
    assert_eq!(r["membership"], "out");
    let zeros = r#"{"deg":{"0/0":"0","0/1":"0","1/0":"0"},"generic":true}"#;
    let (_, r, _) = run(&["regions", "check", "--profile", "p=3;f=2,1", "--point", zeros, "--region", "sigma"]);
    assert_eq!((r["membership"].as_str(), r["case"].as_str()), (Some("out"), Some("etale")));
    for (s, expected) in [("0", "out"), ("0,1", "in")] {
        let (_, r, _) =
            run(&["regions", "check", "--profile", "p=3;f=2,1", "--point", zeros, "--region", "sigmaS", "--S", s]);
        assert_eq!(r["membership"], expected, "S={s}");
        assert_eq!(r["S"].as_array().unwrap().len(), s.split(',').count());
    }
}

#[test]
fn coverage_depends_on_the_prime() {
    let (code, r, _) = run(&["regions", "coverage", "--profile", "p=3;f=2,1"]);
    assert_eq!((code, r["pass"].clone()), (0, Value::Bool(true)));
    let (code, r, _) = run(&["regions", "coverage", "--profile", "p=2;f=2"]);
    assert_eq!(code, 1);
    assert_eq!(r["counterexamples"][0]["clause"], "edge-interval");
}

#[test]
fn sigma_up_and_its_genericity_control() {
    let (code, r, _) = run(&["verify", "sigma-up", "--profile", "p=3;f=2", "--den", "24"]);
    assert_eq!(code, 0);
    assert_eq!(r["counts"]["in_sigma"], 79);
    let (code, r, _) =
        run(&["verify", "sigma-up", "--profile", "p=3;f=2", "--den", "24", "--drop-genericity", "--max-counterexamples", "1"]);
    assert_eq!(code, 1);
    assert_eq!(r["counterexamples_total"], 2);
    assert_eq!(r["counterexamples"].as_array().unwrap().len(), 1);
    let c = &r["counterexamples"][0];
    assert_eq!((c["beta"].as_str(), c["lhs"].as_str()), (Some("0/0"), Some("3")));
}

#[test]
fn sigma_up_at_two_finds_no_witness_on_the_grid() {
    let (code, r, _) = run(&["verify", "sigma-up", "--profile", "p=2;f=2", "--den", "8"]);
    assert_eq!(code, 0);
    assert_eq!(r["counterexamples_total"], 0);
}

#[test]
fn saturation_and_newton() {
    let (code, r, _) = run(&["verify", "saturation", "--profile", "p=3;f=2,1", "--den", "12"]);
    assert_eq!(code, 0);
    assert_eq!(r["region"], "saturation");
    let (code, r, _) = run(&["verify", "newton", "--profile", "p=3;f=3", "--den", "27"]);
    assert_eq!(code, 0);
    assert!(r["check"]["counts"]["nonempty"].as_u64().unwrap() > 0);
}

#[test]
fn gauss_sum_over_f5() {
    let (code, r, _) = run(&["gauss", "--q", "5", "--char-exp", "2"]);
    assert_eq!(code, 0);
    assert_eq!(r["order"], 2);
    assert_eq!(r["gauss_sum"]["conductor"], 10);
    assert_eq!(r["gauss_sum"]["coefficients"], serde_json::json!(["1", "0", "2", "-2"]));
    let (_, r, _) = run(&["gauss", "--q", "7", "--char-exp", "6"]);
    let coeffs = r["gauss_sum"]["coefficients"].as_array().unwrap();
    assert_eq!(coeffs[0], "-1");
    assert!(coeffs[1..].iter().all(|c| c == "0"));
}

#[test]
fn twist_report() {
    let args = ["verify", "twist", "--q", "3", "--n", "4", "--trials", "4", "--seed", "7"];
    let (code, r, _) = run(&args);
    assert_eq!(code, 0);
    assert_eq!(r["pass"], true);
    assert_eq!(r["cases"], 8);
    assert_eq!(r["negative_control"]["detected"], true);
    assert_eq!(r["negative_control"]["outcome"]["first_failure"], r["negative_control"]["corrupted"]);
    assert_eq!(run(&args).1, r);
}

#[test]
fn suite_passes_on_the_reference_profile() {
    let (code, r, _) = run(&["suite", "--profile", "p=3;f=2,1", "--den", "24", "--samples", "200", "--trials", "1"]);
    assert_eq!(code, 0);
    let checks = r["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 9);
    assert!(checks.iter().all(|c| c["pass"] == true), "{r}");
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        &["strata", "enumerate", "--profile", "p=4;f=1"][..],
        &["strata", "enumerate", "--profile", "nonsense"],
        &["verify", "sigma-up", "--profile", "p=3;f=2", "--den", "0"],
        &["regions", "check", "--profile", "p=3;f=1", "--point", "{}", "--region", "sigma"],
        &["regions", "check", "--profile", "p=3;f=1", "--point", r#"{"deg":{"0/0":"1/2"}}"#, "--region", "sigmaS", "--S", "4"],
        &["gauss", "--q", "6", "--char-exp", "1"],
        &["frobnicate"],
        &[],
        &["suite", "--profile", "p=3;f=1", "--workers", "0"],
    ] {
        let (code, r, err) = run(args);
        assert_eq!(code, 2, "{args:?}");
        assert_eq!(r, Value::Null);
        assert!(!err.is_empty());
    }
    let mut out = Vec::new();
    assert_eq!(run_with(["overcon", "--help"], &mut out, &mut Vec::new()), 0);
    assert!(String::from_utf8(out).unwrap().contains("Usage"));
}

#[test]
fn report_goes_to_the_out_file() {
    let path = std::env::temp_dir().join(format!("overcon-out-{}.json", std::process::id()));
    let (code, r, _) = run(&["strata", "enumerate", "--profile", "p=3;f=1", "--out", path.to_str().unwrap()]);
    assert_eq!((code, r), (0, Value::Null));
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert_eq!(written["count"], 3);
}

#[test]
fn binary_reads_workers_from_the_environment() {
    let bin = env!("CARGO_BIN_EXE_overcon");
    let args = ["suite", "--profile", "p=3;f=1,1", "--den", "12", "--samples", "100", "--trials", "1"];
    let one = Command::new(bin).args(args).env("TOOL_WORKERS", "1").output().unwrap();
    let three = Command::new(bin).args(args).env("TOOL_WORKERS", "3").output().unwrap();
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, three.stdout);
    let bad = Command::new(bin).args(args).env("TOOL_WORKERS", "many").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(bad.stdout.is_empty());
}
