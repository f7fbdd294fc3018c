use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_charmoment"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn constants_json() {
    let out = run(&["--json", "constants", "--m", "0.5,1", "--order", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v[1]["value"], 2.0);
    let c = v[0]["value"].as_f64().unwrap();
    assert!((c - 2.0 / 3f64.sqrt()).abs() < 1e-8);
}

#[test]
fn unconverged_constant_fails_without_truncate() {
    let out = run(&[
        "constants",
        "--m",
        "0.5",
        "--prime",
        "1009",
        "--k-max",
        "50",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&[
        "constants",
        "--m",
        "0.5",
        "--prime",
        "1009",
        "--k-max",
        "50",
        "--truncate",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("D(p=1009"));
}

#[test]
fn verify_thm1_report() {
    let out = run(&["--json", "verify-thm1", "--prime", "1009", "--m", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["n"], 1007);
    assert_eq!(v["hypothesis"], "certified");
    let lhs = v["lhs"].as_f64().unwrap();
    assert!((lhs - 2.0 * 1007.0).abs() < 4.0 * 1009f64.sqrt() + 8.0);
}

#[test]
fn uncertified_hypothesis_exits_one() {
    let out = run(&["verify-thm1", "--prime", "13", "--poly", "0,0,1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("inconclusive"));
}

#[test]
fn verify_thm2_binomial_has_no_violations() {
    let out = run(&["--json", "verify-thm2", "--prime", "499", "--binomial", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["condition_violations"], 0);
    assert_eq!(v["n"], 494);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(
        run(&["verify-thm1", "--prime", "10"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["verify-thm1", "--prime", "1013", "--order", "3"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["weil-check", "--prime", "101", "--poly", "5"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["sweep", "--nonsense"]).status.code(), Some(2));
    assert_eq!(run(&["sweep", "--mode", "thm3"]).status.code(), Some(2));
    assert_eq!(run(&[]).status.code(), Some(2));
}

#[test]
fn bound_checks_pass() {
    for args in [
        &["weil-check", "--prime", "101", "--poly", "1,2,3"][..],
        &[
            "fkm-check",
            "--prime",
            "409",
            "--poly",
            "1,1,0,1",
            "--order",
            "4",
        ][..],
        &[
            "completion-check",
            "--prime",
            "211",
            "--poly",
            "3,0,0,1",
            "--a",
            "5",
            "--start",
            "17",
            "--len",
            "90",
        ][..],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(0), "{args:?}");
    }
    let v = json(&run(&[
        "--json",
        "weil-check",
        "--prime",
        "103",
        "--poly",
        "0,0,1",
    ]));
    assert!((v["lhs_mag"].as_f64().unwrap() - 103f64.sqrt()).abs() < 1e-9);
}

#[test]
fn fkm_above_cap_is_usage_error() {
    let out = run(&["fkm-check", "--prime", "409", "--cap", "100"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_to_csv_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("records.csv");
    let out = run(&[
        "sweep",
        "--mode",
        "thm2",
        "--poly",
        "0,1,0,1",
        "--a",
        "2",
        "--lo",
        "100",
        "--hi",
        "300",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("p,N,lhs,constant,abs_error,normalized_error,m1,m2,violations,hypothesis,wall_ms")
    );
    assert_eq!(lines.count(), 37);
    assert!(String::from_utf8_lossy(&out.stdout).contains("admissible 37"));
}

#[test]
fn sweep_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("spec.json");
    std::fs::write(
        &cfg,
        r#"{"mode":"thm1","primes":{"list":[103,107,109]},"poly":{"coeffs":"1,0,1"},"order":3,"m":0.5,
            "interval":{"fraction":{"start":1,"fraction":0.5}},"fkm_enabled":true}"#,
    )
    .unwrap();
    let out = run(&["--json", "sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let outcome = &v["outcome"];
    assert_eq!(outcome["records"].as_array().unwrap().len(), 2);
    assert_eq!(outcome["skipped"][0]["p"], 107);
    assert_eq!(outcome["records"][0]["N"], 51);
    assert_eq!(outcome["fkm"].as_array().unwrap().len(), 2);

    std::fs::write(
        &cfg,
        r#"{"mode":"thm1","primes":{"list":[103]},"poly":{"coeffs":"1,0,1"},"m":0.5}"#,
    )
    .unwrap();
    assert_eq!(
        run(&["sweep", "--config", cfg.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn empty_sweep_exits_one() {
    let out = run(&["sweep", "--lo", "24", "--hi", "28"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no admissible primes"));
}

#[test]
fn example_binomial_small_range() {
    let out = run(&[
        "--json",
        "example-binomial",
        "--lo",
        "1000",
        "--hi",
        "5000",
        "--m",
        "0.5",
        "--a",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["identity_failures"].as_array().unwrap().len(), 0);
    assert_eq!(v["series"][0]["violations"], 0);
    assert_eq!(v["pass"], true);
}
