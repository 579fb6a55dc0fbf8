use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn fellerstar(args: &[&str]) -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fellerstar"));
    c.args(args).env_remove("FELLERSTAR_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    fellerstar(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn validate_reports_status_and_exit_code() {
    let ok = run(&["validate", "--beta", "0.5,0.5"]);
    assert_eq!(ok.status.code(), Some(0));
    let v = json(&ok);
    assert_eq!(v["status"], "ok");
    assert_eq!(v["provenance"]["tool"], "fellerstar");
    assert_eq!(v["provenance"]["config_hash"].as_str().unwrap().len(), 64);

    let bad = run(&["validate", "--beta", "0.5,-1"]);
    assert_eq!(bad.status.code(), Some(2));
    assert_eq!(json(&bad)["status"], "invalid");
}

#[test]
fn usage_and_io_errors() {
    assert_eq!(run(&["resolvent", "--beta", "1", "--x", "middle"]).status.code(), Some(2));
    assert_eq!(run(&["resolvent", "--beta", "1", "--g", "cubic"]).status.code(), Some(2));
    assert_eq!(run(&["validate", "--config", "/nonexistent/run.json"]).status.code(), Some(1));
    assert_eq!(run(&["exitstats", "--dt", "0.01"]).status.code(), Some(2));
}

#[test]
fn resolvent_of_one_is_one_over_lambda() {
    let out = run(&["resolvent", "--beta", "0.5,0.3,0.2", "--g", "one", "--lambda", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["analytic"].as_f64().unwrap() - 0.5).abs() < 1e-9);
    assert!(v["estimate"].is_null());
    assert!(v["provenance"]["seed"].is_null());
}

#[test]
fn potential_estimate_agrees_with_formula() {
    // On the half-line the lambda-potential of local time from 0 is 1/sqrt(2 lambda).
    let out = run(&["potential", "--beta", "1", "--mc", "--paths", "400", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["analytic"].as_f64().unwrap() - 0.5f64.sqrt()).abs() < 1e-9);
    assert!(v["estimate"]["z"].as_f64().unwrap().abs() < 4.0);
    assert_eq!(v["provenance"]["seed"], 3);
}

#[test]
fn simulate_is_reproducible() {
    let args = ["simulate", "--beta", "0.5,0.5", "--paths", "10", "--horizon", "0.5", "--seed", "42"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# fellerstar 0.1.0 command=simulate"));
    assert_eq!(lines.next().unwrap(), "path,t,state,edge,x,local_time");
    assert_eq!(lines.count(), 10 * 51);

    let c = run(&["simulate", "--beta", "0.5,0.5", "--paths", "10", "--horizon", "0.5", "--seed", "43"]);
    assert_ne!(c.stdout, text.as_bytes());
}

#[test]
fn seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"schema": 1, "k": 1, "beta": [1], "settings": {"seed": 9}}"#).unwrap();
    let cfg = cfg.to_str().unwrap();
    let seed_of = |extra: &[&str], env: Option<&str>| {
        let mut args = vec!["potential", "--config", cfg, "--mc", "--paths", "20"];
        args.extend_from_slice(extra);
        let mut c = fellerstar(&args);
        if let Some(e) = env {
            c.env("FELLERSTAR_SEED", e);
        }
        json(&c.output().unwrap())["provenance"]["seed"].as_u64().unwrap()
    };
    assert_eq!(seed_of(&[], None), 9);
    assert_eq!(seed_of(&[], Some("17")), 17);
    assert_eq!(seed_of(&["--seed", "5"], Some("17")), 5);

    let mut bad = fellerstar(&["potential", "--config", cfg, "--mc", "--paths", "20"]);
    bad.env("FELLERSTAR_SEED", "minus one");
    assert_eq!(bad.output().unwrap().status.code(), Some(2));
}

#[test]
fn config_with_tail_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("tail.csv"), "x,N\n0.5,1.0\n1.0,0.5\n2.0,0.0\n").unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"schema": 1, "k": 2, "alpha": 0.2, "beta": [0.6, 0.4], "gamma": 0.3,
            "measure": {"kind": "finite", "delta": 1.0, "p": [0.5, 0.5],
                        "radial": [{"type": "tabulated-csv", "file": "tail.csv"}, {"type": "exponential", "rate": 1.0}]},
            "g": {"kind": "exp-decay"}}"#,
    )
    .unwrap();
    let out = run(&["resolvent", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let first = json(&out);
    let r = first["analytic"].as_f64().unwrap();
    assert!(r > 0.0 && r < 1.0);

    // The hash covers the sidecar contents.
    fs::write(dir.path().join("tail.csv"), "x,N\n0.5,1.0\n1.0,0.25\n2.0,0.0\n").unwrap();
    let second = json(&run(&["resolvent", "--config", cfg.to_str().unwrap()]));
    assert_ne!(first["provenance"]["config_hash"], second["provenance"]["config_hash"]);

    fs::remove_file(dir.path().join("tail.csv")).unwrap();
    assert_eq!(run(&["resolvent", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn infinite_measure_needs_truncation_for_estimates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"schema": 1, "k": 2, "beta": [0.5, 0.5],
            "measure": {"kind": "infinite", "tails": [{"type": "stable-like", "c": 0.5, "index": 0.5},
                                                     {"type": "stable-like", "c": 0.5, "index": 0.5}]}}"#,
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    assert_eq!(run(&["resolvent", "--config", cfg, "--g", "one"]).status.code(), Some(0));
    assert_eq!(run(&["resolvent", "--config", cfg, "--g", "one", "--mc", "--paths", "20"]).status.code(), Some(2));
    let out = run(&["converge", "--config", cfg, "--g", "exp-decay", "--ladder", "0.4,0.2,0.1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["rungs"].as_array().unwrap().len(), 3);
}

#[test]
fn coarse_steps_are_flagged_out_of_band() {
    // Output times between steps of 0.5 are interpolated, which misses much
    // of the time spent in a thin band.
    let out = run(&[
        "resolvent", "--beta", "0.5,0.5", "--g", r#"{"kind":"band","edge":0,"a":0.3,"b":0.35}"#, "--mc", "--paths",
        "2000", "--dt", "0.5", "--dt-max", "0.5", "--seed", "1",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(json(&out)["estimate"]["z"].as_f64().unwrap() < -4.0);
}

#[test]
fn density_and_exitstats_write_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("density.csv");
    let out = run(&["density", "--beta", "0.5,0.5", "--bins", "20", "--paths", "500", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 2 + 20);

    let out = run(&["exitstats", "--alpha", "2", "--paths", "2000", "--dt", "1e-4", "--seed", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["tau"]["reference"].as_f64().unwrap() - 0.21).abs() < 1e-12);
}
