use std::path::Path;
use std::process::{Command, Output};

fn delayosc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_delayosc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn lambda_table_row_at_nine_eighths() {
    let o = delayosc(&["lambda-table"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("s,lambda,sigma\n"));
    let row = text.lines().find(|l| l.starts_with("1.125,")).unwrap();
    let v: Vec<f64> = row.split(',').map(|x| x.parse().unwrap()).collect();
    assert!((v[1] - (1.625 + std::f64::consts::LN_2)).abs() < 1e-11);
    assert!((v[2] - (2.75 + std::f64::consts::LN_2)).abs() < 1e-11);
}

#[test]
fn figure_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("fig.csv");
    let svg = dir.path().join("fig.svg");
    assert!(delayosc(&["figure", "--output", csv.to_str().unwrap()])
        .status
        .success());
    assert!(delayosc(&["figure", "--output", svg.to_str().unwrap()])
        .status
        .success());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 401);
    assert_eq!(text.lines().next(), Some("s,lambda"));
    let pic = std::fs::read_to_string(&svg).unwrap();
    assert!(pic.starts_with("<svg"));
    assert_eq!(pic.matches("<circle").count(), 2);
}

#[test]
fn example_fixtures_simulate_back() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = delayosc(&["example", "--name", "x_s", "--s", "2", "--output", d]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let input = dir.path().join("x_s.json");
    let o = delayosc(&["simulate", "--input", input.to_str().unwrap(), "--horizon", "9"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("t,x\n"));
    let mut last = f64::NEG_INFINITY;
    for line in text.lines().skip(1) {
        let (t, x) = line.split_once(',').unwrap();
        let (t, x): (f64, f64) = (t.parse().unwrap(), x.parse().unwrap());
        assert!(t > last);
        last = t;
        // x_2 is the 2-periodic tent 1 − |(t mod 2) − 1|
        let r = t.rem_euclid(2.0);
        let exact = if r <= 1.0 { r } else { 2.0 - r };
        assert!((x - exact).abs() < 1e-6, "t={t}: {x} vs {exact}");
    }
    assert!((last - 9.0).abs() < 1e-9);
}

#[test]
fn certify_never_claims_decay_of_x2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert!(delayosc(&["example", "--name", "x_s", "--s", "2", "--output", d])
        .status
        .success());
    let input = dir.path().join("x_s.json");
    let o = delayosc(&["certify", "--input", input.to_str().unwrap(), "--horizon", "20"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let theorem = v["certificate"]["theorem"].as_str().unwrap();
    assert!(!theorem.ends_with("to_zero") && theorem != "exponential", "{theorem}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", "{\"coefficient\": [");
    assert_eq!(delayosc(&["simulate", "--input", &bad]).status.code(), Some(2));

    let gap = write(
        dir.path(),
        "gap.json",
        r#"{"coefficient": {"pieces": [{"start": 0, "end": 1, "kind": "constant", "params": [1]},
                                       {"start": 1.5, "end": 2, "kind": "constant", "params": [1]}],
                            "extension": {"type": "periodic", "period": 2}},
            "delay": {"pieces": [{"start": 0, "end": 1, "kind": "affine", "params": [1, -1]}],
                      "extension": {"type": "affine_periodic", "period": 1}}}"#,
    );
    let o = delayosc(&["simulate", "--input", &gap]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("1.5"));

    let ahead = write(
        dir.path(),
        "ahead.json",
        r#"{"coefficient": {"pieces": [{"start": 0, "end": 1, "kind": "constant", "params": [1]}],
                            "extension": {"type": "periodic", "period": 1}},
            "delay": {"pieces": [{"start": 0, "end": 1, "kind": "affine", "params": [1, 1]}],
                      "extension": {"type": "affine_periodic", "period": 1}}}"#,
    );
    let o = delayosc(&["simulate", "--input", &ahead]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("delay exceeds t"));

    let blowup = write(
        dir.path(),
        "blowup.json",
        r#"{"coefficient": {"pieces": [{"start": 0, "end": 1, "kind": "constant", "params": [-1000]}],
                            "extension": {"type": "periodic", "period": 1}},
            "delay": {"pieces": [{"start": 0, "end": 1, "kind": "affine", "params": [1, 0]}],
                      "extension": {"type": "affine_periodic", "period": 1}}}"#,
    );
    let o = delayosc(&["simulate", "--input", &blowup, "--step", "1e-4", "--horizon", "2"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert!(delayosc(&["example", "--name", "y_s", "--s", "1.5", "--output", d])
        .status
        .success());
    let input = dir.path().join("y_s.json");
    let args = ["analyze", "--input", input.to_str().unwrap(), "--horizon", "15"];
    let (a, b) = (delayosc(&args), delayosc(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}
