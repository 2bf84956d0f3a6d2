//! End-to-end runs of the `isatn-sim` binary on a shortened scenario.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use isatn_core::report::summary_from_csv;
use isatn_core::sim::Summary;
use isatn_core::{load_scenario, Model, PolicyKind};
use serde_json::Value;

fn sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isatn-sim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn arg(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// The default scenario cut to one day and a couple of training episodes.
fn short_scenario(dir: &Path) -> PathBuf {
    let full = dir.join("full.json");
    assert_eq!(code(&sim(&["default-scenario", "--out", arg(&full)])), 0);
    let mut v: Value = serde_json::from_str(&fs::read_to_string(&full).unwrap()).unwrap();
    v["days"] = 1.into();
    v["rain_events"][0]["start_hour"] = 10.0.into();
    v["rain_events"][0]["end_hour"] = 11.0.into();
    v["rain_events"].as_array_mut().unwrap().truncate(1);
    v["traffic_profiles"]["surge"] = Value::Null;
    v["orchestration"]["rl"]["episodes"] = 2.into();
    v["orchestration"]["rl"]["episode_days"] = 1.into();
    let path = dir.join("short.json");
    fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    path
}

fn shipped_scenario() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/default.json")
}

#[test]
fn validate_accepts_the_shipped_scenario() {
    let o = sim(&["validate", "--scenario", arg(&shipped_scenario())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "OK");
}

#[test]
fn shipped_scenario_matches_the_builtin_default() {
    let spec = load_scenario(shipped_scenario()).unwrap();
    assert_eq!(spec, isatn_core::default_paper_scenario());
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(code(&sim(&[])), 2);
    assert_eq!(code(&sim(&["run", "--scenario", "x.json"])), 2);
    let o = sim(&["run", "--scenario", "x.json", "--policy", "greedy", "--seed", "1", "--out", "o"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn runtime_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("missing.json");
    assert_eq!(code(&sim(&["validate", "--scenario", arg(&missing)])), 1);

    let bad = tmp.path().join("bad.json");
    let mut v: Value = serde_json::from_str(&fs::read_to_string(shipped_scenario()).unwrap()).unwrap();
    v["not_a_field"] = 1.into();
    fs::write(&bad, v.to_string()).unwrap();
    let o = sim(&["validate", "--scenario", arg(&bad)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));

    let o = sim(&[
        "run",
        "--scenario",
        arg(&shipped_scenario()),
        "--policy",
        "mpc_rl",
        "--seed",
        "1",
        "--out",
        arg(tmp.path()),
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn train_then_run_is_reproducible_and_summaries_rebuild() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = short_scenario(tmp.path());
    let policy = tmp.path().join("policy.json");
    let o = sim(&["train-rl", "--scenario", arg(&scenario), "--episodes", "2", "--out", arg(&policy)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let mut outputs = Vec::new();
    for i in 0..2 {
        let out = tmp.path().join(format!("run{i}"));
        let o = sim(&[
            "run",
            "--scenario",
            arg(&scenario),
            "--policy",
            "mpc_rl",
            "--seed",
            "4",
            "--out",
            arg(&out),
            "--policy-file",
            arg(&policy),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        for f in ["fig_carbon_trace.csv", "fig_energy_breakdown.csv", "fig_latency_event.csv"] {
            assert!(out.join(f).is_file(), "{f} missing");
        }
        outputs.push((fs::read(out.join("kpis.csv")).unwrap(), fs::read(out.join("summary.json")).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);

    let model = Model::new(&load_scenario(&scenario).unwrap()).unwrap();
    let csv = String::from_utf8(outputs[0].0.clone()).unwrap();
    let rebuilt = summary_from_csv(&model, PolicyKind::MpcRl, 4, &csv).unwrap();
    let written: Summary = serde_json::from_slice(&outputs[0].1).unwrap();
    assert_eq!(rebuilt, written);
}

#[test]
fn compare_writes_every_run_and_the_aggregate() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = short_scenario(tmp.path());
    let out = tmp.path().join("cmp");
    let o = sim(&[
        "compare",
        "--scenario",
        arg(&scenario),
        "--policies",
        "static,qos,energy,mpc_rl",
        "--seeds",
        "1,2,3",
        "--out",
        arg(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for p in ["static", "qos", "energy", "mpc_rl"] {
        for s in 1..=3 {
            let d = out.join(format!("{p}_seed{s}"));
            assert!(
                d.join("kpis.csv").is_file() && d.join("summary.json").is_file(),
                "{} incomplete",
                d.display()
            );
        }
    }
    assert!(out.join("policy.json").is_file());
    assert!(out.join("comparison.csv").is_file());
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("comparison.json")).unwrap()).unwrap();
    assert!(report.is_object());
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 12);
}
