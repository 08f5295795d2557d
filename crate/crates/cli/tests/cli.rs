use std::path::Path;
use std::process::{Command, Output};

fn hypoineq(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypoineq"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn list_is_stable_and_complete() {
    let d = tempfile::tempdir().unwrap();
    let o = hypoineq(&["list"], d.path());
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let names: Vec<&str> = text.lines().filter_map(|l| l.split_whitespace().next()).collect();
    assert!(names.len() >= 8);
    assert!(names.contains(&"tm"));
    assert!(text.lines().all(|l| l.split_whitespace().count() > 1));
    assert_eq!(text, String::from_utf8(hypoineq(&["list"], d.path()).stdout).unwrap());
}

#[test]
fn syntax_error_exits_2_with_position() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "bad.toml", "suites = [\"tm\"]\nseed = = 3\n");
    let o = hypoineq(&["run", &cfg], d.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2, column"), "{}", stderr(&o));
}

#[test]
fn empty_suite_list_exits_2() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "empty.toml", "suites = []\n");
    let o = hypoineq(&["run", &cfg], d.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 1"), "{}", stderr(&o));
    assert!(!d.path().join("hypoineq-report").exists());
}

#[test]
fn unknown_suite_is_located() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "u.toml", "seed = 4\nsuites = [\"tm\", \"hardyy\"]\n");
    let o = hypoineq(&["run", &cfg], d.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2, column 17"), "{}", stderr(&o));
}

#[test]
fn passing_run_writes_json_and_csv() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "tm.toml", "suites = [\"tm\"]\n");
    let o = hypoineq(&["run", &cfg, "--out", "out", "--seed", "5", "--jobs", "1"], d.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(json["seed"], 5);
    assert_eq!(json["pass"], true);
    assert!(json["constants"].is_object());
    let csv = std::fs::read_to_string(d.path().join("out/tm.csv")).unwrap();
    assert!(csv.lines().count() > 5);
    assert!(csv.lines().next().unwrap().contains("pass"));
}

#[test]
fn failing_entry_exits_1_and_is_listed() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(
        d.path(),
        "fail.toml",
        r#"suites = ["tm"]

[output]
dir = "reports"

[[entry]]
id = "tight"
suite = "tm"
theorem = "hardy-sobolev"
group = "R:3"
params = { p = 2, q = 2, a = 1, b = 2 }
family = "gaussian"
theta = [[1.0]]
envelope = 0.5
"#,
    );
    let o = hypoineq(&["run", &cfg], d.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("tm/tight[0]"), "{}", stderr(&o));
    assert!(d.path().join("reports/report.json").exists());
}

#[test]
fn constants() {
    let d = tempfile::tempdir().unwrap();
    let o = hypoineq(&["constant", "htype", "--k", "2", "--l", "1"], d.path());
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let want = 4.0 * (std::f64::consts::PI.powi(2) / 4.0).powf(1.0 / 3.0);
    assert!((v["alpha_q"].as_f64().unwrap() - want).abs() < 1e-9);

    let o = hypoineq(
        &["constant", "alpha-q", "--group", "R:2", "--norm", "euclidean"],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["alpha_q"].as_f64().unwrap() - 4.0 * std::f64::consts::PI).abs() < 1e-6);

    let o = hypoineq(&["constant", "alpha-q", "--group", "R:2:2,1"], d.path());
    assert_eq!(o.status.code(), Some(2));
}
