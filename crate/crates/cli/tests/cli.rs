use std::process::{Command, Output};

use serde_json::Value;

fn taukit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_taukit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let mut all = vec!["--json"];
    all.extend_from_slice(args);
    let out = taukit(&all);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

#[test]
fn tau_point_and_range() {
    assert_eq!(json(&["tau", "--k", "3", "--n", "4"])["tau"], 6);
    let v = json(&["tau", "--k", "2", "--lo", "1", "--hi", "6"]);
    assert_eq!(v["values"], serde_json::json!([1, 2, 2, 3, 2, 4]));
    assert_eq!(v["sum2"], "38");
}

#[test]
fn dump_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t4.bin");
    let p = path.to_str().unwrap();
    let first = json(&["tau", "--k", "4", "--lo", "5", "--hi", "40", "--dump", p]);
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(bytes.len(), 8 * (3 + 36));
    assert_eq!(u64::from_le_bytes(bytes[0..8].try_into().unwrap()), 4);
    assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 5);
    assert_eq!(u64::from_le_bytes(bytes[16..24].try_into().unwrap()), 40);
    // τ_4(8) = binom(6, 3) = 20 sits at offset 8 - 5.
    assert_eq!(u64::from_le_bytes(bytes[24 + 3 * 8..24 + 4 * 8].try_into().unwrap()), 20);
    let second = json(&["tau", "--read", p]);
    assert_eq!(first, second);
}

#[test]
fn delta_table_matches_closed_form() {
    let v = json(&["delta", "--r", "2", "--s", "2", "--l", "2", "--table", "4..9"]);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 6);
    for row in rows {
        let k = row["k"].as_i64().unwrap();
        let g = gcd(10 - k, 12 * k + 24);
        let expected = format!("{}/{}", (10 - k) / g, (12 * k + 24) / g);
        assert_eq!(row["delta_rational"], expected.as_str(), "k={k}");
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[test]
fn moment_and_parseval() {
    let v = json(&["moment", "--r", "2", "--j", "2", "--n", "2"]);
    assert_eq!(v["exact"], "6");
    assert!((v["quadrature"].as_f64().unwrap() - 6.0).abs() < 1e-9);
    let p = json(&["parseval", "--k", "2", "--l", "2", "--x", "2", "--m", "50"]);
    assert_eq!(p["rhs"], 38);
    assert!(p["relative_gap"].as_f64().unwrap() < 1e-10);
}

#[test]
fn gauss_csv_has_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.csv");
    let out = taukit(&["gauss", "--r", "2", "--q-max", "9", "--csv", path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("q,a,beta,re,im,abs,bound_ratio"));
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        let q: f64 = cols[0].parse().unwrap();
        let abs: f64 = cols[5].parse().unwrap();
        if q as u64 % 2 == 1 {
            assert!((abs - q.sqrt()).abs() < 1e-9, "{line}");
        }
    }
}

#[test]
fn coeff_reports_divisor_coefficients() {
    let v = json(&["coeff", "--k", "2", "--q", "3", "--x-lo", "1e4", "--x-hi", "1e6", "--points", "16"]);
    let a1 = v["A"][1][0].as_f64().unwrap();
    assert!((a1 - 1.0 / 3.0).abs() < 1e-3, "{v}");
    assert!(v["a_spread"].as_f64().unwrap() < 0.05);
    assert_eq!(v["X_grid"].as_array().unwrap().len(), 16);
}

#[test]
fn verify_emits_schema_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.csv");
    let v = json(&[
        "verify", "--k", "2", "--r", "2", "--s", "2", "--l", "3", "--x-grid", "1e3,1e4", "--q-max", "20", "--x-lo",
        "1e4", "--x-hi", "1e5", "--points", "16", "--csv", path.to_str().unwrap(),
    ]);
    assert_eq!(v["version"], 1);
    assert_eq!(v["params"]["l"], 3);
    assert_eq!(v["grid"].as_array().unwrap().len(), 2);
    for row in v["grid"].as_array().unwrap() {
        let ratio = row["ratio"].as_f64().unwrap();
        assert!((ratio - 1.0).abs() < 0.2, "{row}");
    }
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("X,S,M,ratio\n"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn exit_codes() {
    assert_eq!(taukit(&["tau", "--k", "1", "--n", "5"]).status.code(), Some(2));
    assert_eq!(taukit(&["moment", "--r", "2", "--j", "2", "--n", "2", "--m", "10"]).status.code(), Some(2));
    assert_eq!(
        taukit(&["--budget-mb", "1", "tau", "--k", "4", "--lo", "1", "--hi", "100000000"]).status.code(),
        Some(3)
    );
    assert_eq!(taukit(&["sseries", "--k", "2", "--r", "2", "--s", "2", "--l", "1"]).status.code(), Some(2));
    assert_eq!(taukit(&["frobnicate"]).status.code(), Some(2));
}
