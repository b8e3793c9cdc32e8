//! End-to-end checks of the binary: flags, exit codes, artifacts.

use std::process::Command;

fn floodbed() -> Command {
    Command::new(env!("CARGO_BIN_EXE_floodbed"))
}

/// Minimal fast sim scenario used by the CLI tests.
fn mini_toml() -> &'static str {
    r#"
name = "mini"
duration_s = 40.0

[[devices]]
device_id = 1
telemetry_period_s = 0.2

[[devices]]
device_id = 2
telemetry_period_s = 0.2
compromised = true

[attack_plan]
mode = "scheduled"
intervals_s = [[15.0, 5.0]]

[ids]
training_packets = 100
"#
}

#[test]
fn list_scenarios_names_presets() {
    let out = floodbed().arg("list-scenarios").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "benign-only",
        "attack10-mitigation",
        "attack60-nomitigation",
        "probabilistic",
    ] {
        assert!(text.contains(name), "missing preset {name}");
    }
}

#[test]
fn run_config_writes_artifacts_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("mini.toml");
    std::fs::write(&config, mini_toml()).unwrap();
    let out_dir = dir.path().join("run");
    let out = floodbed()
        .args(["run", "--config"])
        .arg(&config)
        .args(["--seed", "3", "--out"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for file in [
        "timeline.csv",
        "decisions.csv",
        "batch_members.csv",
        "events.csv",
        "drops.csv",
        "ground_truth.csv",
        "manifest.json",
        "run_stats.json",
        "report.json",
        "queue.svg",
        "rate.svg",
        "delay.svg",
        "decisions.svg",
    ] {
        assert!(out_dir.join(file).exists(), "missing artifact {file}");
    }
    let header = std::fs::read_to_string(out_dir.join("timeline.csv")).unwrap();
    assert!(header.starts_with("time_s,queue_len,proc_rate_pps,delay_ms,mitigation_active\n"));
}

#[test]
fn gamma_flag_accepts_named_preset() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("mini.toml");
    std::fs::write(&config, mini_toml()).unwrap();
    let out = floodbed()
        .args(["run", "--config"])
        .arg(&config)
        .args(["--gamma", "tuned"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("0.3787"), "tuned gamma not applied:\n{text}");
}

#[test]
fn config_errors_exit_two() {
    // Unknown preset.
    let out = floodbed()
        .args(["run", "--scenario", "not-a-preset"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Invalid field value, reported with its path.
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(
        &config,
        "name = \"bad\"\nduration_s = 40.0\ngamma = 7.0\n[[devices]]\ndevice_id = 1\n",
    )
    .unwrap();
    let out = floodbed()
        .args(["run", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("gamma"), "field path missing: {err}");

    // Missing scenario source entirely.
    let out = floodbed().arg("run").output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Sweep demands sim mode.
    let out = floodbed()
        .args(["sweep-gamma", "--scenario", "live-smoke", "--grid", "0.3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn busy_port_exits_three() {
    // Hold the port so the live server cannot bind it.
    let blocker = std::net::UdpSocket::bind("127.0.0.1:0").unwrap();
    let port = blocker.local_addr().unwrap().port();
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("mini.toml");
    std::fs::write(&config, mini_toml()).unwrap();
    let out = floodbed()
        .args(["run", "--config"])
        .arg(&config)
        .args(["--mode", "live", "--port", &port.to_string()])
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(3),
        "expected transport exit: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn sweep_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("mini.toml");
    std::fs::write(&config, mini_toml()).unwrap();
    let out_dir = dir.path().join("sweep");
    let out = floodbed()
        .args(["sweep-gamma", "--config"])
        .arg(&config)
        .args(["--grid", "0.0,0.3,1.0", "--out"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let table = std::fs::read_to_string(out_dir.join("gamma_sweep.csv")).unwrap();
    assert!(table.starts_with("gamma,tp,fp,tn,fn,accuracy,tpr,tnr\n"));
    assert_eq!(table.lines().count(), 4);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("max-accuracy gamma"), "{stdout}");
}

#[test]
fn presets_complete_quickly_in_sim() {
    // Every sim preset finishes well inside the desk-scale budget.
    let started = std::time::Instant::now();
    for name in [
        "benign-only",
        "attack10-nomitigation",
        "attack10-mitigation",
        "attack60-nomitigation",
        "attack60-mitigation",
        "probabilistic",
    ] {
        let per_preset = std::time::Instant::now();
        let out = floodbed()
            .args(["run", "--scenario", name])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{name}");
        assert!(
            per_preset.elapsed().as_secs() < 60,
            "{name} exceeded 60 s wall time"
        );
    }
    assert!(started.elapsed().as_secs() < 120);
}
