use hypoineq::report::{list_suites, run, RunOptions, SuiteConfig};

fn cfg(text: &str) -> SuiteConfig {
    SuiteConfig::parse(text).unwrap()
}

#[test]
fn registry_lists_every_suite() {
    let s = list_suites();
    assert!(s.len() >= 8);
    assert!(s.iter().any(|(n, _)| *n == "tm"));
    assert!(s.iter().all(|(_, d)| !d.is_empty()));
}

#[test]
fn config_echo_reruns_to_the_same_verdicts() {
    let a = run(&cfg("suites = [\"tm\", \"ckn\"]\nseed = 11"), RunOptions::default()).unwrap();
    let echo: SuiteConfig = serde_json::from_value(serde_json::to_value(&a.config).unwrap()).unwrap();
    let b = run(
        &echo,
        RunOptions {
            jobs: Some(1),
            progress: None,
        },
    )
    .unwrap();
    assert_eq!(a.verdicts(), b.verdicts());
    assert_eq!(a.deterministic_json(), b.deterministic_json());
}

#[test]
fn ratio_entries_carry_their_parts() {
    let r = run(&cfg("suites = [\"hls\"]"), RunOptions::default()).unwrap();
    let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    let mut seen = 0;
    for s in json["suites"].as_array().unwrap() {
        for e in s["entries"].as_array().unwrap() {
            if !e["ratio"].is_null() {
                seen += 1;
                for key in ["lhs", "rhs", "abs_error", "method", "seed"] {
                    assert!(!e[key].is_null(), "{} lacks {key}", e["id"]);
                }
            }
        }
    }
    assert!(seen > 0);
}

#[test]
fn plane_ball_volume_instance() {
    let r = run(&cfg("suites = [\"weights\"]"), RunOptions::default()).unwrap();
    let e = r.suites[0]
        .entries
        .iter()
        .find(|e| e.id == "a1-ball-volume-r2")
        .unwrap();
    assert!(e.pass);
    assert!((e.value.unwrap() - 1.0).abs() < 1e-3);
    let csv = hypoineq::report::Report::suite_csv(&r.suites[0]);
    assert_eq!(csv.lines().count(), r.suites[0].entries.len() + 1);
}
