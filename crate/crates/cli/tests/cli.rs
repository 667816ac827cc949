use carnot_cli::output::{render, sig6, Format};
use carnot_cli::resolve_seed;
use proptest::prelude::*;
use serde_json::Value;
use std::process::{Command, Output};

fn carnot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_carnot")).args(args).env_remove("CARNOT_SEED").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("json report")
}

fn tmp(name: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("carnot-cli-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d.join(name)
}

#[test]
fn dims_of_free_two_three() {
    let o = carnot(&["algebra", "dims", "--group", "free:2,3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "[2,1,2]\n");
    assert_eq!(stdout(&carnot(&["algebra", "dims", "--group", "engel", "--format", "text"])), "[2,1,1]\n");
}

#[test]
fn gauge_of_unit_horizontal_point() {
    let o = carnot(&["group", "gauge", "--group", "heisenberg", "--point", "1,0,0"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "1.0\n");
    // |(0,0,4)| = 16^{1/4}.
    assert_eq!(stdout(&carnot(&["group", "gauge", "--point", "[0,0,4]", "--format", "text"])), "2.0\n");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(carnot(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(carnot(&[]).status.code(), Some(2));
    assert_eq!(carnot(&["group", "gauge", "--point", "1,0"]).status.code(), Some(2));
    assert_eq!(carnot(&["group", "gauge", "--point", "1,x,0"]).status.code(), Some(2));
    assert_eq!(carnot(&["algebra", "dims", "--group", "nilpotent"]).status.code(), Some(2));
    assert_eq!(carnot(&["algebra", "dims", "--group", "/nonexistent/spec.json"]).status.code(), Some(2));
    assert_eq!(carnot(&["fields", "show", "3,1"]).status.code(), Some(2));
    assert_eq!(carnot(&["rewrite", "trace", "--step", "3", "--profile", "1,1,1"]).status.code(), Some(2));
    assert_eq!(carnot(&["solve", "--n", "4", "--bc", "poly:q"]).status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_carnot")).args(["algebra", "dims"]).env("CARNOT_SEED", "abc").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(carnot(&["--help"]).status.code(), Some(0));
}

#[test]
fn group_products_exact_and_float() {
    // (1,0,0)(0,1,0) = (1,1,1/2) on Heisenberg.
    assert_eq!(stdout(&carnot(&["group", "mul", "--p", "1,0,0", "--q", "0,1,0"])), "[\"1\",\"1\",\"1/2\"]\n");
    let f = json(&carnot(&["group", "mul", "--p", "1,0,0", "--q", "0,1,0", "--precision", "float"]));
    assert_eq!(f, serde_json::json!([1.0, 1.0, 0.5]));
    assert_eq!(stdout(&carnot(&["group", "inv", "--point", "1/2,-3,2"])), "[\"-1/2\",\"3\",\"-2\"]\n");
    assert_eq!(stdout(&carnot(&["group", "dilate", "--s", "2", "--point", "1,1,1"])), "[\"2\",\"2\",\"4\"]\n");
    let d = json(&carnot(&["group", "dist", "--p", "1,1,1/2", "--q", "1,1,1/2"]));
    assert_eq!(d.as_f64(), Some(0.0));
}

#[test]
fn ballvol_honours_seed_precedence() {
    let a = json(&carnot(&["group", "ballvol", "--samples", "20000", "--seed", "5"]));
    let b = Command::new(env!("CARGO_BIN_EXE_carnot"))
        .args(["group", "ballvol", "--samples", "20000", "--seed", "9"])
        .env("CARNOT_SEED", "5")
        .output()
        .unwrap();
    let b: Value = serde_json::from_slice(&b.stdout).unwrap();
    assert_eq!(a, b);
    assert_eq!(a["seed"], 5);
    let c = json(&carnot(&["group", "ballvol", "--samples", "20000"]));
    assert_eq!(c["seed"], carnot_cli::DEFAULT_SEED);
}

#[test]
fn spec_round_trip_and_broken_table() {
    let path = tmp("engel.json");
    let p = path.to_str().unwrap();
    assert_eq!(carnot(&["algebra", "new", "--group", "engel", "--out", p]).status.code(), Some(0));
    let o = carnot(&["algebra", "check", "--spec", p]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["valid"], true);
    assert_eq!(stdout(&carnot(&["algebra", "dims", "--group", p])), "[2,1,1]\n");
    let m = json(&carnot(&["algebra", "new", "--free", "2,2"]));
    assert_eq!(m["kind"], "free");
    assert_eq!(m["brackets"].as_array().unwrap().len(), 1);

    let broken = tmp("broken.json");
    std::fs::write(&broken, r#"{"kind":"table","m":2,"r":2,"layer_dims":[2,1],"brackets":[]}"#).unwrap();
    let o = carnot(&["algebra", "check", "--spec", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("StratificationViolation"));
    let garbage = tmp("garbage.json");
    std::fs::write(&garbage, "{").unwrap();
    assert_eq!(carnot(&["algebra", "check", "--spec", garbage.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn fields_show_and_residual() {
    let o = json(&carnot(&["fields", "show", "1,1"]));
    assert_eq!(o["label"], serde_json::json!([1, 1]));
    assert_eq!(o["coefficients"], serde_json::json!(["1", "0", "-1/2*p[1,2]"]));
    // Σ X_i² (x y) = 0 on Heisenberg but X_i² z² ≠ 0.
    let zero = json(&carnot(&["fields", "residual", "--u", r#"[{"exp":[1,1,0],"coeff":"1"}]"#]));
    assert_eq!(zero["zero"], true);
    let nz = json(&carnot(&["fields", "residual", "--u", r#"[{"exp":[0,0,2],"coeff":1}]"#]));
    assert_eq!(nz["zero"], false);
    // Data that cancels the residual.
    let cancel = json(&carnot(&["fields", "residual", "--u", r#"[{"exp":[2,0,0]}]"#, "--f", r#"[{"exp":[0,0,0],"coeff":"2"}]"#]));
    assert_eq!(cancel["zero"], true);
}

#[test]
fn rewrite_trace_writes_schema() {
    let path = tmp("trace.json");
    let o = carnot(&["rewrite", "trace", "--step", "4", "--profile", "1,2,0", "--json", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let file: Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(file, json(&o));
    let steps = file["steps"].as_array().unwrap();
    assert!(!steps.is_empty());
    for s in steps {
        for key in ["rule", "in_profile", "out_profiles", "W_in", "W_out"] {
            assert!(s.get(key).is_some(), "missing {key}");
        }
        assert!(s["W_out"].as_u64() < s["W_in"].as_u64());
    }
}

#[test]
fn rewrite_obstruction_and_sweep() {
    let o = carnot(&["rewrite", "obstruction"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["obstructed"], serde_json::json!([2]));
    let s = carnot(&["rewrite", "sweep", "--steps", "2,3", "--max-total", "4"]);
    assert_eq!(s.status.code(), Some(0));
    assert_eq!(json(&s)["pass"], true);
    assert_eq!(carnot(&["rewrite", "sweep", "--steps", "1"]).status.code(), Some(2));
}

#[test]
fn solve_writes_node_table() {
    let path = tmp("u.csv");
    let o = carnot(&["solve", "--group", "heisenberg", "--n", "8", "--bc", "poly:p11", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let mut rd = csv::Reader::from_path(&path).unwrap();
    assert_eq!(rd.headers().unwrap().iter().collect::<Vec<_>>(), ["p[1,1]", "p[1,2]", "p[2,1]", "u1"]);
    let rows: Vec<Vec<f64>> = rd.records().map(|r| r.unwrap().iter().map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 9 * 9 * 9);
    // x is harmonic and reproduced exactly.
    assert!(rows.iter().all(|r| (r[3] - r[0]).abs() < 1e-8));
    assert_eq!(json(&o)["nodes"], 729);
}

#[test]
fn verify_reports_have_common_shape() {
    for check in ["caccioppoli", "peetre", "hormander", "decay", "supbound", "estimate"] {
        let o = carnot(&["verify", check, "--resolutions", "8,16"]);
        let v = json(&o);
        for key in ["check", "resolutions", "values", "ratio", "stable"] {
            assert!(v.get(key).is_some(), "{check}: missing {key}");
        }
        assert_eq!(v["resolutions"], serde_json::json!([8, 16]));
        assert_eq!(o.status.code(), Some(if v["stable"] == true { 0 } else { 1 }));
    }
    let d = json(&carnot(&["verify", "decay", "--tau", "0.5", "--radii", "0.25,0.5,1", "--resolutions", "16"]));
    assert!(d["fitted_exponent"].as_f64().unwrap() > 5.0);
    // A ball that does not fit the box is a computation failure.
    assert_eq!(carnot(&["verify", "supbound", "--resolutions", "4", "--radius", "0.9"]).status.code(), Some(1));
}

#[test]
fn suite_reports_broken_group() {
    let broken = tmp("broken-suite.json");
    std::fs::write(&broken, r#"{"kind":"table","m":2,"r":2,"layer_dims":[2,1],"brackets":[]}"#).unwrap();
    let o = carnot(&["suite", "--group", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let v = json(&o);
    assert_eq!(v["pass"], false);
    assert_eq!(v["criteria"].as_array().unwrap().len(), 11);
    assert!(v["group"]["violations"][0].as_str().unwrap().starts_with("StratificationViolation"));
}

#[test]
fn seed_resolution_order() {
    assert_eq!(resolve_seed(None, None).unwrap(), carnot_cli::DEFAULT_SEED);
    assert_eq!(resolve_seed(Some(3), None).unwrap(), 3);
    assert_eq!(resolve_seed(Some(3), Some("11")).unwrap(), 11);
    assert!(resolve_seed(None, Some("-1")).is_err());
}

proptest! {
    #[test]
    fn text_format_keeps_six_significant_digits(x in -1e9f64..1e9) {
        let s = sig6(x);
        let back: f64 = s.parse().unwrap();
        prop_assert!((back - x).abs() <= 5e-6 * x.abs().max(1e-300));
        let digits = s.split('e').next().unwrap().chars().filter(char::is_ascii_digit).collect::<String>();
        prop_assert!(digits.trim_start_matches('0').trim_end_matches('0').len() <= 6);
    }

    #[test]
    fn json_format_is_lossless(x in proptest::num::f64::NORMAL) {
        let text = render(&serde_json::json!({"x": x}), Format::Json);
        let num = text.split(':').nth(1).unwrap().trim().trim_end_matches('}').trim();
        prop_assert_eq!(num.parse::<f64>().unwrap(), x);
    }
}
