//! Drives the installed binary end to end: output files and their headers,
//! determinism across identical invocations, JSON validity of `solve`, and
//! exit behavior on broken configurations.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn splitsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_splitsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("reading {name}: {e}"))
}

const SINGLE_NODE: &str = "../../configs/single_node.json";
const URBAN: &str = "../../configs/urban_5g_mec.json";

#[test]
fn run_writes_the_three_logs_with_pinned_headers() {
    let tmp = tempfile::tempdir().unwrap();
    let out = splitsim(&[
        "run",
        "--config",
        SINGLE_NODE,
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let requests = read(tmp.path(), "requests.csv");
    assert_eq!(
        requests.lines().next().unwrap(),
        "request_id,arrival_s,workload,served,latency_ms,epoch,penalized_by_migration"
    );
    let kpi = read(tmp.path(), "kpi.csv");
    assert_eq!(
        kpi.lines().next().unwrap(),
        "start_s,end_s,arrivals,served,mean_latency_ms,p95_latency_ms,ewma_latency_ms,throughput_rps,max_node_utilization,mean_node_utilization,reconfig_count"
    );
    let events = read(tmp.path(), "events.jsonl");
    for line in events.lines() {
        let v: serde_json::Value = serde_json::from_str(line).expect("valid JSON per line");
        assert!(v.get("kind").is_some());
        assert!(v.get("t_s").is_some());
    }

    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("scenario single-node (adaptive)"));
    assert!(stdout.contains("steady state:"));
}

#[test]
fn identical_invocations_give_identical_bytes_and_seeds_matter() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    for (dir, seed) in [(&a, None), (&b, None), (&c, Some("99"))] {
        let mut args = vec!["run", "--config", SINGLE_NODE, "--out", dir.path().to_str().unwrap()];
        if let Some(seed) = seed {
            args.extend(["--seed", seed]);
        }
        let out = splitsim(&args);
        assert!(out.status.success());
    }
    for name in ["requests.csv", "kpi.csv", "events.jsonl"] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name} not reproducible");
    }
    assert_ne!(
        read(a.path(), "requests.csv"),
        read(c.path(), "requests.csv"),
        "seed override must change the arrival process"
    );
}

#[test]
fn mode_override_forces_a_static_run() {
    let tmp = tempfile::tempdir().unwrap();
    let out = splitsim(&[
        "run",
        "--config",
        URBAN,
        "--mode",
        "static",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("(static)"));
    // A static run never cycles the monitor, so the event log is empty.
    assert_eq!(read(tmp.path(), "events.jsonl"), "");
}

#[test]
fn sweep_writes_summary_chart_and_cell_directories() {
    let tmp = tempfile::tempdir().unwrap();
    let out = splitsim(&[
        "sweep",
        "--config",
        SINGLE_NODE,
        "--bandwidths",
        "50,100",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let summary = read(tmp.path(), "summary.csv");
    assert_eq!(
        summary.lines().next().unwrap(),
        "bandwidth_mbps,static_latency_ms,adaptive_latency_ms,delta_pct,throughput_ratio,max_gpu_util,reconfig_count"
    );
    assert_eq!(summary.lines().count(), 3);

    let svg = read(tmp.path(), "latency_vs_bandwidth.svg");
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("</svg>"));

    for dir in ["50mbps-static", "50mbps-adaptive", "100mbps-static", "100mbps-adaptive"] {
        for name in ["requests.csv", "kpi.csv", "events.jsonl"] {
            assert!(tmp.path().join(dir).join(name).is_file(), "missing {dir}/{name}");
        }
    }
}

#[test]
fn solve_prints_valid_json() {
    let out = splitsim(&["solve", "--config", URBAN]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).expect("stdout is JSON");
    assert_eq!(v["scenario"], "urban-5g-mec");
    let placement: Vec<&str> = v["placement"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p.as_str().unwrap())
        .collect();
    assert!(!placement.is_empty());
    for host in &placement {
        assert!(["mec0", "mec1", "mec2", "cloud"].contains(host), "unknown host {host}");
    }
    assert_eq!(
        v["boundaries"].as_array().unwrap().len() + 1,
        placement.len()
    );
    assert!(v["cost"]["total"].as_f64().unwrap() > 0.0);
    assert_eq!(v["cost"]["privacy_violations"], 0);
}

#[test]
fn broken_configurations_fail_with_the_offending_field() {
    let dir = tempfile::tempdir().unwrap();

    let misspelled = dir.path().join("misspelled.json");
    fs::write(
        &misspelled,
        r#"{"modle": {}, "arrival_rate_per_s": 1.0, "duration_s": 10.0}"#,
    )
    .unwrap();
    let out = splitsim(&["run", "--config", misspelled.to_str().unwrap()]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("unknown field"), "stderr: {stderr}");

    let bad_host = dir.path().join("bad_host.json");
    let config = fs::read_to_string(SINGLE_NODE)
        .unwrap()
        .replace("[\"edge\"]", "[\"nope\"]");
    fs::write(&bad_host, config).unwrap();
    let out = splitsim(&["run", "--config", bad_host.to_str().unwrap()]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("baseline.placement"), "stderr: {stderr}");

    let out = splitsim(&["run", "--config", "does-not-exist.json"]);
    assert!(!out.status.success());
}
