use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};

fn g2glue(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_g2glue")).args(args).output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json report")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("g2glue-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn without_timestamp(mut v: Value) -> Value {
    v["header"].as_object_mut().unwrap().remove("timestamp");
    v
}

#[test]
fn every_criterion_command_passes() {
    for args in [
        vec!["verify", "identities", "--mode", "exact"],
        vec!["verify", "linearization"],
        vec!["verify", "product"],
        vec!["verify", "appendix-a"],
        vec!["eh"],
        vec!["solve-fibre"],
        vec!["torsion-table", "--gamma", "1/100"],
        vec!["betti", "--example", "all"],
    ] {
        let out = g2glue(&args);
        let rep = report(&out);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", rep["checks"]);
        assert_eq!(rep["summary"]["failed"], 0);
    }
}

#[test]
fn reports_are_deterministic_and_sorted() {
    let a = report(&g2glue(&["verify", "linearization", "--seed", "11"]));
    let b = report(&g2glue(&["verify", "linearization", "--seed", "11"]));
    assert_eq!(without_timestamp(a.clone()), without_timestamp(b));
    assert_eq!(a["header"]["seed"], 11);
    let ids: Vec<&str> = a["checks"].as_array().unwrap().iter().map(|c| c["id"].as_str().unwrap()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
    let text = String::from_utf8(g2glue(&["betti", "--example", "ex7_1"]).stdout).unwrap();
    let keys: Vec<usize> = ["\"header\"", "\"checks\"", "\"summary\""].iter().map(|k| text.find(k).unwrap()).collect();
    assert!(keys.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn betti_example_values() {
    let rep = report(&g2glue(&["betti", "--example", "ex7_1"]));
    let result = rep["checks"].as_array().unwrap().iter().find(|c| c["id"] == "betti.ex7_1.result").unwrap();
    assert_eq!(result["measured"], serde_json::json!([1, 0, 12, 43, 43, 12, 0, 1]));
}

#[test]
fn torsion_csv_is_exact() {
    let out = g2glue(&["torsion-table", "--gamma", "1/100", "--csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 19);
    assert!(lines.iter().skip(1).all(|l| l.ends_with(",true")));
    let middle_l2 = lines.iter().find(|l| l.starts_with("4,") && l.contains(",L2,")).unwrap();
    // 4 − 4γ/5 at γ = 1/100
    assert!(middle_l2.contains(",4 - 4γ/5,499/125,"), "{middle_l2}");
}

#[test]
fn exit_codes() {
    assert_eq!(g2glue(&["torsion-table", "--gamma", "3/5"]).status.code(), Some(1));
    assert_eq!(g2glue(&["torsion-table", "--gamma", "abc"]).status.code(), Some(2));
    assert_eq!(g2glue(&["betti", "--example", "ex9_9"]).status.code(), Some(2));
    assert_eq!(g2glue(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(g2glue(&["verify"]).status.code(), Some(2));
    assert_eq!(g2glue(&["solve-fibre", "--gamma", "3/4"]).status.code(), Some(2));
}

#[test]
fn outputs_and_config() {
    let dir = scratch("out");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, "seed = 42\ngamma = 1/50\n").unwrap();
    let out_dir = dir.join("reports");
    let out = g2glue(&[
        "torsion-table",
        "--config",
        cfg.to_str().unwrap(),
        "--gamma",
        "1/20",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(saved["header"]["seed"], 42);
    assert_eq!(saved["header"]["parameters"]["gamma"], "1/20");
    let csv = std::fs::read_to_string(out_dir.join("torsion_table.csv")).unwrap();
    assert!(csv.starts_with("region,range,norm"));
    std::fs::write(&cfg, "colour = blue\n").unwrap();
    assert_eq!(g2glue(&["alpha-window", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn betti_from_input_file() {
    let dir = scratch("betti");
    std::fs::create_dir_all(&dir).unwrap();
    let diag = |s: [i64; 7]| -> Vec<Vec<i64>> {
        (0..7).map(|i| (0..7).map(|j| if i == j { s[i] } else { 0 }).collect()).collect()
    };
    let input = serde_json::json!({
        "generators": [
            {"matrix": diag([-1, -1, 1, -1, 1, 1, -1]), "shift": ["0", "0", "0", "0", "0", "0", "0"]},
            {"matrix": diag([-1, 1, -1, -1, 1, -1, 1]), "shift": ["1/2", "0", "0", "0", "0", "0", "0"]},
            {"matrix": diag([1, -1, -1, -1, -1, 1, 1]), "shift": ["0", "1/2", "0", "1/2", "0", "0", "0"]}
        ],
        "singular": [12, 36, 36, 12],
        "expected": [1, 0, 12, 43, 43, 12, 0, 1]
    });
    let path = dir.join("ex.json");
    std::fs::write(&path, input.to_string()).unwrap();
    let out = g2glue(&["betti", "--input", path.to_str().unwrap()]);
    let rep = report(&out);
    assert_eq!(out.status.code(), Some(0), "{}", rep["checks"]);
    let quotient = rep["checks"].as_array().unwrap().iter().find(|c| c["id"] == "betti.input.quotient").unwrap();
    assert_eq!(quotient["measured"]["betti"], serde_json::json!([1, 0, 0, 7, 7, 0, 0, 1]));
    let orbits = rep["checks"].as_array().unwrap().iter().find(|c| c["id"] == "betti.input.fixed_orbits").unwrap();
    assert_eq!(orbits["measured"].as_array().unwrap().len(), 12);

    let mut wrong = input.clone();
    wrong["expected"] = serde_json::json!([1, 0, 12, 44, 44, 12, 0, 1]);
    std::fs::write(&path, wrong.to_string()).unwrap();
    assert_eq!(g2glue(&["betti", "--input", path.to_str().unwrap()]).status.code(), Some(1));
    let _ = std::fs::remove_dir_all(&dir);
}
