use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_synergy-lab")).args(args).output().expect("binary runs")
}

fn config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    lines.map(|l| l.split(',').nth(i).unwrap().to_string()).collect()
}

#[test]
fn sweep_csv_has_header_plus_one_line_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "s.json", r#"{"parameters": {"grid": [1, 2, 3]}}"#);
    let o = lab(&["sweep-lambda", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 4);
    let s: Vec<f64> = column(&text, "synergy").iter().map(|v| v.parse().unwrap()).collect();
    assert!((s[0] - (4.0 / 9.0 * 2f64.ln() + 3f64.ln() / 3.0)).abs() < 1e-9);
    assert!((s[1] - 4.0 / 9.0 * 2f64.ln()).abs() < 1e-9);
    assert_eq!(s[2], 0.0);
}

#[test]
fn additive_default_matches_closed_form() {
    let o = lab(&["additive"]);
    assert_eq!(o.status.code(), Some(0));
    let v: f64 = column(&stdout(&o), "synergy_exact")[0].parse().unwrap();
    assert!((v - (4.0 / 9.0 * 2f64.ln() + 3f64.ln() / 3.0)).abs() < 1e-9);
}

#[test]
fn bits_rescales_information_only() {
    let nats = stdout(&lab(&["additive"]));
    let bits = stdout(&lab(&["additive", "--bits"]));
    let a: f64 = column(&nats, "synergy_exact")[0].parse().unwrap();
    let b: f64 = column(&bits, "synergy_exact")[0].parse().unwrap();
    assert!((a / std::f64::consts::LN_2 - b).abs() < 1e-9);
    assert_eq!(column(&nats, "n_a"), column(&bits, "n_a"));
}

#[test]
fn json_agrees_with_csv() {
    let csv = stdout(&lab(&["additive"]));
    let json: serde_json::Value = serde_json::from_str(&stdout(&lab(&["additive", "--format", "json"]))).unwrap();
    let row = &json.as_array().unwrap()[0];
    let from_csv: f64 = column(&csv, "synergy_exact")[0].parse().unwrap();
    assert_eq!(row["synergy_exact"].as_f64().unwrap(), from_csv);
    assert_eq!(row["verdicts"]["routes_agree"], serde_json::Value::Bool(true));
}

#[test]
fn out_file_receives_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let o = lab(&["additive", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(std::fs::read_to_string(out).unwrap().starts_with("experiment,"));
}

#[test]
fn sweep_na_plotdata_bound_increases() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "n.json", r#"{"parameters": {"n_a_max": 8}}"#);
    let o = lab(&["sweep-na", "--format", "plotdata", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let block = text.split("\n\n").find(|b| b.starts_with("# series: bound")).unwrap();
    let ys: Vec<f64> = block.lines().skip(1).map(|l| l.split(' ').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(ys.len(), 6);
    assert!(ys.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn zoo_direct_concat_has_no_synergy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "z.json", r#"{"parameters": {"families": ["direct_concat"]}}"#);
    let o = lab(&["zoo", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(column(&text, "synergy"), ["0.0"]);
    assert_eq!(column(&text, "verdict_synergy_is_entropy_drop"), ["pass"]);
}

#[test]
fn seed_makes_runs_repeatable() {
    let a = stdout(&lab(&["estimate", "--seed", "7"]));
    let b = stdout(&lab(&["estimate", "--seed", "7"]));
    assert_eq!(a, b);
    assert_eq!(column(&a, "seed"), ["7"]);
}

#[test]
fn malformed_config_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "bad.json", "{bad");
    assert_eq!(lab(&["additive", "--config", &cfg]).status.code(), Some(3));
    let cfg = config(dir.path(), "extra.json", r#"{"parameters": {"n_a": 3, "colour": 1}}"#);
    assert_eq!(lab(&["additive", "--config", &cfg]).status.code(), Some(3));
}

#[test]
fn bad_input_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "f.json", r#"{"parameters": {"families": ["nope"]}}"#);
    assert_eq!(lab(&["zoo", "--config", &cfg]).status.code(), Some(1));
    assert_eq!(lab(&["additive", "--out", "/nonexistent/dir/x.csv"]).status.code(), Some(1));
    assert_eq!(lab(&["additive", "--format", "xml"]).status.code(), Some(1));
    let cfg = config(dir.path(), "m.json", r#"{"experiment": "zoo"}"#);
    assert_eq!(lab(&["additive", "--config", &cfg]).status.code(), Some(1));
}

#[test]
fn divergence_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        "d.json",
        r#"{"parameters": {"train": {"step_size": 1000, "steps": 50, "init_scale": 0.1, "curve_every": 10}}}"#,
    );
    let o = lab(&["controlled", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("diverged"));
}
