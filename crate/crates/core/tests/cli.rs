use std::process::{Command, Output};

use serde_json::Value;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graph-rigidity")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn points(v: &Value) -> &Vec<Value> {
    v["points"].as_array().unwrap()
}

#[test]
fn list_shows_every_scenario() {
    let o = bin(&["list"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().count() > 8);
    assert!(text.contains("identity-s2") && text.contains("torus-linear"));

    let o = bin(&["list", "--match", "holo"]);
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.starts_with("holo")));
}

#[test]
fn report_identity_is_totally_geodesic() {
    let o = bin(&["report", "--scenario", "identity-s2", "--grid", "6", "--format", "json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["command"], "report");
    assert_eq!(points(&v).len(), 36);
    assert!(points(&v).iter().all(|p| p["a_norm_sq"].as_f64().unwrap() < 1e-10));
    assert_eq!(v["classification"]["verdict"], "totally-geodesic-isometric-immersion");
}

#[test]
fn report_square_map_is_minimal() {
    let o = bin(&["report", "--scenario", "holo-w2", "--grid", "5"]);
    let v = json(&o);
    assert!(points(&v).iter().all(|p| p["h_norm"].as_f64().unwrap() < 1e-6));
    assert!(points(&v).iter().any(|p| p["a_norm_sq"].as_f64().unwrap() > 1e-3));
}

#[test]
fn report_constant_map_trace() {
    let o = bin(&["report", "--scenario", "constant-s2", "--grid", "4"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert!(points(&v).iter().all(|p| (p["trace_s"].as_f64().unwrap() - 2.0).abs() < 1e-12));
    assert_eq!(v["classification"]["verdict"], "constant");
}

#[test]
fn verify_identities_exit_codes() {
    let o = bin(&["verify-identities", "--scenario", "identity-s2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert!(v["identities"].as_array().unwrap().iter().all(|r| r["pass"] == true));

    let o = bin(&["verify-identities", "--scenario", "torus-linear"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    let skipped: Vec<&Value> = v["identities"].as_array().unwrap().iter().filter(|r| r["status"] != "checked").collect();
    assert!(!skipped.is_empty());
}

#[test]
fn check_theorem_exit_codes() {
    assert_eq!(code(&bin(&["check-theorem", "--scenario", "identity-s2"])), 0);
    assert_eq!(code(&bin(&["check-theorem", "--scenario", "constant-s3"])), 0);
    let o = bin(&["check-theorem", "--scenario", "torus-linear", "--sigma", "1"]);
    assert_eq!(code(&o), 1);
    let v = json(&o);
    assert_eq!(v["hypotheses"]["pinching_ok"], false);
    assert_eq!(v["classification"]["verdict"], "hypothesis-violated");
    assert!(String::from_utf8_lossy(&o.stderr).contains("verdict"));
}

#[test]
fn usage_errors() {
    let o = bin(&["report", "--scenario", "no-such-map"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("no-such-map"));
    assert_eq!(code(&bin(&["report"])), 2);
    assert_eq!(code(&bin(&["report", "--scenario", "identity-s2", "--grid", "1"])), 2);
    assert_eq!(code(&bin(&["report", "--scenario", "identity-s2", "--tol", "bogus=1"])), 2);
    assert_eq!(code(&bin(&["frobnicate"])), 2);
}

#[test]
fn out_of_chart_box() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, r#"{"scenario": "identity-s2", "grid": {"box": {"lo": [-20, -20], "hi": [20, 20]}, "resolution": [3]}}"#).unwrap();
    let o = bin(&["report", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn reports_are_byte_identical() {
    let args = ["report", "--scenario", "rotation-s3", "--grid", "4", "--seed", "5"];
    let a = bin(&args);
    let b = bin(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let c = bin(&["report", "--scenario", "rotation-s3", "--grid", "4", "--seed", "5", "--threads", "1"]);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn csv_matches_json() {
    let base = ["report", "--scenario", "holo-w3", "--grid", "4"];
    let v = json(&bin(&base));
    let o = bin(&[&base[..], &["--format", "csv"]].concat());
    assert_eq!(code(&o), 0);
    let mut reader = csv::Reader::from_reader(&o.stdout[..]);
    let mut seen = 0;
    for row in reader.records() {
        let row = row.unwrap();
        let (path, value) = (&row[0], &row[1]);
        let Some(rest) = path.strip_prefix("points[") else { continue };
        let (idx, field) = rest.split_once("].").unwrap();
        if field != "trace_s" && field != "a_norm_sq" {
            continue;
        }
        let expected = v["points"][idx.parse::<usize>().unwrap()][field].as_f64().unwrap();
        let got: f64 = value.parse().unwrap();
        assert!((got - expected).abs() <= 1e-15 * expected.abs().max(1.0), "{path}: {got} vs {expected}");
        assert_eq!(format!("{got:.14e}"), format!("{expected:.14e}"));
        seen += 1;
    }
    assert_eq!(seen, 2 * 16);
}

#[test]
fn output_file_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let o = bin(&["check-theorem", "--scenario", "identity-s2", "--grid", "4", "--output", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["command"], "check-theorem");
}
