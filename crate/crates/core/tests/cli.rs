use std::fs;
use std::path::Path;
use std::process::Command;

fn growthlab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_growthlab")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn analyze_writes_json_report_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "exp.json",
        r#"{"schema":"growth-lab/1","name":"exp","kind":"analyze","subject":{"series":{"builtin":"exp"}},
            "grid":{"r_min":2,"r_max":40},"params":{"expect":{"order_m":[0.95,1.05]}}}"#,
    );
    let out = dir.path().join("out");
    let o = growthlab(&["analyze", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("exp.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "completed");
    assert_eq!(report["checks"][0]["name"], "order_m");
    assert_eq!(report["checks"][0]["verdict"], "pass");
    assert!(report["environment"]["elapsed_seconds"].is_number());
    let sample = fs::read_to_string(out.join("exp_sample_m.csv")).unwrap();
    assert!(sample.starts_with("r,value,ratio\n"));
}

#[test]
fn csv_format_and_failing_expectation_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "exp.json",
        r#"{"schema":"growth-lab/1","name":"exp","kind":"analyze","subject":{"series":{"builtin":"exp"}},
            "grid":{"r_min":2,"r_max":40},"params":{"expect":{"order_m":[1.5,2.0]}}}"#,
    );
    let out = dir.path().join("out");
    let o = growthlab(&["verify", "--config", &cfg, "--out", out.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(o.status.code(), Some(1));
    let checks = fs::read_to_string(out.join("exp_checks.csv")).unwrap();
    assert!(checks.starts_with("name,measured,expected,tolerance,verdict\norder_m,"));
    assert!(checks.lines().nth(1).unwrap().ends_with(",fail"));
}

#[test]
fn config_errors_exit_two_with_a_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.json",
        r#"{"schema":"growth-lab/1","name":"bad","kind":"analyze","subject":{"series":{"builtin":"exp"}},
            "triple":{"alpha":{"kind":"identity"},"beta":{"kind":"identiti"},"gamma":{"kind":"identity"}}}"#,
    );
    let o = growthlab(&["analyze", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/triple/beta"));

    let solve = write(
        dir.path(),
        "solve.json",
        r#"{"schema":"growth-lab/1","name":"s","kind":"solve","subject":{"equation":{"k":1,"A":[{"poly":[-1]}]}}}"#,
    );
    assert_eq!(growthlab(&["analyze", "--config", &solve]).status.code(), Some(2));
    assert_eq!(growthlab(&["analyze", "--config", "/nonexistent.json"]).status.code(), Some(2));
}

#[test]
fn solve_emits_coefficients_and_overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "solve.json",
        r#"{"schema":"growth-lab/1","name":"first_order","kind":"solve","subject":{"equation":{"k":1,"A":[{"poly":[-1]}]}},
            "grid":{"r_min":1,"r_max":5}}"#,
    );
    let out = dir.path().join("out");
    let o = growthlab(&["solve", "--config", &cfg, "--out", out.to_str().unwrap(), "--r-max", "8"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let coeffs = fs::read_to_string(out.join("first_order_solution0_coefficients.csv")).unwrap();
    assert!(coeffs.starts_with("n,ln_abs_a_n,arg_a_n\n0,"));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("first_order.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["grid"]["r_max"], 8.0);
}

#[test]
fn scales_audits_builtin_triples() {
    let o = growthlab(&["scales"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("\"triple\""));
}
