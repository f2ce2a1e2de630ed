use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn feedlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_feedlab")).args(args).output().expect("spawn feedlab")
}

fn write(dir: &TempDir, name: &str, body: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const CAPACITY: &str = "[experiment]\nkind = \"capacity\"\nchannel = { kind = \"bsc\", p = 0.11 }\n";

const STOP: &str = r#"
seed = 5
trials = 2000
[experiment]
kind = "stop_feedback"
channel = { kind = "bsc", p = 0.11 }
prior = { kind = "uniform", m = 16 }
gamma = 4.0
"#;

#[test]
fn capacity_json_in_bits() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.toml", CAPACITY);
    let out = feedlab(&["capacity", "--config", &cfg, "--units", "bits"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let line = String::from_utf8(out.stdout).unwrap();
    let v: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
    let cap = v["metrics"][0]["value"]["estimate"].as_f64().unwrap();
    assert_eq!(v["metrics"][0]["unit"], "bits");
    let h = -0.11 * f64::log2(0.11) - 0.89 * f64::log2(0.89);
    assert!((cap - (1.0 - h)).abs() < 1e-9, "{cap}");
}

#[test]
fn csv_to_file_and_overrides() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "s.toml", STOP);
    let out_path = dir.path().join("out.csv");
    let out = feedlab(&[
        "sim-vlf", "--config", &cfg, "--seed", "9", "--trials", "1500", "--workers", "2", "--format", "csv", "--out",
        out_path.to_str().unwrap(), "--check",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(Path::new(&out_path)).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("record,kind,seed,point,metric"));
    let tau = lines.find(|l| l.contains(",tau,")).unwrap();
    assert!(tau.starts_with("0,stop_feedback,9,"), "{tau}");
    assert!(tau.contains(",1500,"), "{tau}");
}

#[test]
fn config_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.toml", &CAPACITY.replace("capacity", "teleport"));
    let out = feedlab(&["capacity", "--config", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("experiment"));

    let cap = write(&dir, "c.toml", CAPACITY);
    assert_eq!(feedlab(&["sim-vlf", "--config", &cap]).status.code(), Some(2));
    let stop = write(&dir, "s.toml", STOP);
    assert_eq!(feedlab(&["sim-vlf", "--config", &stop, "--trials", "10"]).status.code(), Some(2));
    assert_eq!(feedlab(&["sweep", "--config", &cap]).status.code(), Some(2));
}

#[test]
fn violations_exit_3_only_with_check() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "v.toml",
        "trials = 1000\n[experiment]\nkind = \"ppm\"\nmessages = 16\nenergy = 2.0\nn0 = 1.0\n",
    );
    assert_eq!(feedlab(&["sim-energy", "--config", &cfg, "--check"]).status.code(), Some(0));
    // A loose sequential test spends less than H nats of N0 and so breaks the energy floor.
    let loose = write(
        &dir,
        "h.toml",
        "trials = 2000\n[experiment]\nkind = \"huffman_energy\"\nn0 = 1.0\ntransmitter = { kind = \"sprt\", step_energy = 0.05, delta = 0.45 }\nprior = { kind = \"uniform\", m = 64 }\n",
    );
    let plain = feedlab(&["sim-energy", "--config", &loose]);
    assert_eq!(plain.status.code(), Some(0), "{}", String::from_utf8_lossy(&plain.stderr));
    let checked = feedlab(&["sim-energy", "--config", &loose, "--check"]);
    assert_eq!(checked.status.code(), Some(3), "{}", String::from_utf8_lossy(&checked.stderr));
    assert!(String::from_utf8_lossy(&checked.stderr).contains("violation"));
}

#[test]
fn sweep_emits_one_record_per_point() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "sw.json",
        r#"{"experiment": {"kind": "capacity", "channel": {"kind": "bsc", "p": 0.1}},
            "sweep": {"axes": [{"path": "experiment.channel.p", "values": [0.0, 0.1, 0.5]}]}}"#,
    );
    let out = feedlab(&["sweep", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let recs: Vec<serde_json::Value> =
        String::from_utf8(out.stdout).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(recs.len(), 3);
    assert_eq!(recs[2]["point"][0][1], 0.5);
}

#[test]
fn shipped_configs_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        feedlab_core::harness::ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        n += 1;
    }
    assert!(n >= 4);
}
