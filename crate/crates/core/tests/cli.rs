use std::process::{Command, Output};

use serde_json::Value;

fn siegel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_siegel"))
        .args(args)
        .env_remove("SIEGEL_EPS")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn theta_null_at_i() {
    let out = siegel(&["theta", "--v", "0,0", "--z", r#"[["0+1i"]]"#]);
    assert!(out.status.success());
    let v = json(&out);
    let value = siegel_theta::verify::parse_complex(v["value"].as_str().unwrap()).unwrap();
    assert!((value.re - 1.086_434_811_213_308).abs() < 1e-10);
    assert!(value.im.abs() < 1e-12);
    assert!(v["tail_bound"].as_f64().unwrap() < 1e-12);
}

#[test]
fn odd_characteristic_is_zero() {
    let out = siegel(&["theta", "--v", "1/2,1/2", "--z", r#"[["0.3+0.9i"]]"#]);
    assert_eq!(json(&out)["value"], "0+0i");
}

#[test]
fn level_two_is_refused() {
    let out = siegel(&["btheta", "--v", "1/2,0,0,0", "--z", r#"[["0+1i","0.1"],["0.1","0+1.2i"]]"#]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("becomes identically zero when N=2"), "{err}");
}

#[test]
fn btheta_accepts_level_three() {
    let out = siegel(&["btheta", "--v", "1/3,0,0,0", "--z", r#"[["0+1i","0.1"],["0.1","0+1.2i"]]"#]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["level"], 3);
    assert!(v["log_magnitude"].as_f64().unwrap().is_finite());
}

#[test]
fn parse_errors_carry_positions() {
    let out = siegel(&["theta", "--v", "1/3,x", "--z", r#"[["0+1i"]]"#]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("component 1"));
    let out = siegel(&["theta", "--v", "0,0", "--z", r#"[["0+1j"]]"#]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn non_symmetric_point_is_rejected() {
    let out = siegel(&["theta", "--v", "0,0,0,0", "--z", r#"[["0+1i","0.1"],["0.2","0+1i"]]"#]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reports_are_deterministic() {
    let args = ["verify", "action", "--genus", "2", "--level", "5", "--trials", "4", "--seed", "7"];
    let a = siegel(&args);
    let b = siegel(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = siegel(&["verify", "action", "--genus", "2", "--level", "5", "--trials", "4", "--seed", "8"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn report_shape() {
    let out = siegel(&["verify", "vanishing", "--genus", "2", "--samples", "3"]);
    assert!(out.status.success());
    let r = json(&out);
    assert_eq!(r["command"], "verify vanishing");
    assert_eq!(r["parameters"]["seed"], 0);
    assert!(r.get("timing").is_none());
    for c in r["checks"].as_array().unwrap() {
        assert!(c["reference"].as_str().is_some_and(|s| !s.is_empty()));
        assert_eq!(c["status"], "pass");
    }
    let timed = siegel(&["verify", "vanishing", "--genus", "2", "--samples", "3", "--timing"]);
    assert!(json(&timed)["timing"]["elapsed_ms"].is_u64());
}

#[test]
fn eps_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_siegel"))
        .args(["verify", "genus1", "--genus", "1", "--level", "3", "--samples", "1"])
        .env("SIEGEL_EPS", "1e-9")
        .output()
        .unwrap();
    assert_eq!(json(&out)["parameters"]["eps"], 1e-9);
    let out = Command::new(env!("CARGO_BIN_EXE_siegel"))
        .args(["verify", "genus1", "--genus", "1", "--level", "3", "--samples", "1", "--eps", "1e-10"])
        .env("SIEGEL_EPS", "1e-9")
        .output()
        .unwrap();
    assert_eq!(json(&out)["parameters"]["eps"], 1e-10);
}

#[test]
fn invalid_config_is_refused() {
    let out = siegel(&["verify", "genus1", "--genus", "1", "--level", "3", "--samples", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let out = siegel(&["verify", "genus1", "--genus", "1", "--level", "3", "--eps", "-1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn budget_refusal_names_requirement() {
    let out = siegel(&["verify", "vanishing", "--genus", "5"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("needs") && err.contains("budget"), "{err}");
}

#[test]
fn unknown_suite_is_rejected() {
    let out = siegel(&["verify", "everything"]);
    assert!(!out.status.success());
}

#[test]
fn json_out_mirrors_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = siegel(&["verify", "orders", "--json-out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(std::fs::read(&path).unwrap(), out.stdout);
}

#[test]
fn exploratory_primitivity_reports_hypothesis() {
    for (level, reason) in [("3", "(2^g-1) does not divide N"), ("4", "N != 1,2,4")] {
        let out = siegel(&["primitivity", "--genus", "2", "--level", level]);
        assert!(out.status.success());
        let r = json(&out);
        let checks = r["checks"].as_array().unwrap();
        assert_eq!(checks[0]["status"], "hypothesis-not-met");
        assert_eq!(checks[0]["detail"]["failed_condition"], reason);
        assert!(checks.iter().all(|c| c["name"] != "primitivity-exhaustion"));
    }
}

#[test]
fn exploratory_fibers_at_level_three() {
    let out = siegel(&["primitivity", "--genus", "2", "--level", "3"]);
    let r = json(&out);
    let fibers: Vec<&Value> = r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["name"].as_str().unwrap().starts_with("fiber-"))
        .collect();
    assert_eq!(fibers.len(), 12);
    assert!(fibers.iter().all(|c| c["status"] == "pass"));
}

#[test]
fn stabilizer_genus_one_smoke() {
    let out = siegel(&["stabilizer", "--genus", "1", "--level", "3", "--set", "full"]);
    assert!(out.status.success());
    let r = json(&out);
    assert_eq!(r["checks"][0]["detail"]["elements"], 12);
    assert_eq!(r["checks"][2]["detail"]["size"], 1);
}

#[test]
fn fibers_target_grammar() {
    let out = siegel(&["fibers", "--genus", "2", "--level", "5", "--target", "f", "--samples", "4"]);
    assert!(out.status.success());
    assert_eq!(json(&out)["checks"][0]["detail"]["numeric_matches"][0], "1/5,1/5,0,0");
    let out = siegel(&["fibers", "--target", "g"]);
    assert!(!out.status.success());
}

#[test]
fn sequential_matches_parallel() {
    let args = ["primitivity", "--genus", "2", "--level", "5", "--samples", "4"];
    let par = siegel(&args);
    let mut seq_args = args.to_vec();
    seq_args.push("--sequential");
    let seq = siegel(&seq_args);
    assert_eq!(par.stdout, seq.stdout);
}
