//! Preset-level behavior checks beyond the acceptance gate.

use floodbed_core::ids::Label;
use floodbed_core::metrics;
use floodbed_core::runner;
use floodbed_core::scenario::preset;
use floodbed_core::traffic::PacketKind;

#[test]
fn benign_only_yields_no_attack_decisions() {
    // Allow up to 2% false-positive batches; with a clean benign trace the
    // detector should produce none at all.
    let scenario = preset("benign-only").unwrap();
    for seed in 0..5 {
        let run = runner::run_sim(&scenario, seed).unwrap();
        let attacks = run
            .decisions
            .iter()
            .filter(|d| d.label == Label::Attack)
            .count();
        let total = run.decisions.len().max(1);
        assert!(
            attacks * 50 <= total, // 2%
            "seed {seed}: {attacks}/{total} attack decisions on benign traffic"
        );
        assert!(
            run.decisions.len() >= 20,
            "training must complete within 120 s"
        );
        assert_eq!(run.stats.activation_count, 0);
    }
}

#[test]
fn mitigation_keeps_queue_very_short() {
    // The mitigated 10 s attack holds the queue near the batch size while
    // the unmitigated run backs up by thousands.
    let unmitigated = runner::run_sim(&preset("attack10-nomitigation").unwrap(), 2).unwrap();
    let mitigated = runner::run_sim(&preset("attack10-mitigation").unwrap(), 2).unwrap();
    assert!(
        unmitigated.stats.peak_queue > 8000,
        "overload never built up"
    );
    assert!(
        mitigated.stats.peak_queue <= 30,
        "mitigated peak {} not short",
        mitigated.stats.peak_queue
    );
    assert!(mitigated.stats.activation_count >= 1);
    // Nothing reaches the buffer while the drop window is active.
    for r in &mitigated.timeline {
        if r.mitigation_active {
            assert_eq!(
                r.queue_len, 0,
                "queued packets during a drop window at {}s",
                r.time_s
            );
        }
    }
}

#[test]
fn degradation_hook_paralyzes_processing_rate() {
    // With the overload hook on, service halves while the backlog exceeds
    // the threshold, and recovers once it drains below it.
    let mut scenario = preset("attack10-nomitigation").unwrap();
    scenario.duration_s = 600.0; // slower drain needs more room
    scenario.service.degradation_enabled = true;
    let run = runner::run_sim(&scenario, 0).unwrap();

    let busy: Vec<&floodbed_core::artifacts::TimelineRow> =
        run.timeline.iter().filter(|r| r.queue_len > 6000).collect();
    assert!(!busy.is_empty(), "queue never passed the degradation band");
    let min_busy_rate = busy
        .iter()
        .map(|r| r.proc_rate_pps)
        .fold(f64::MAX, f64::min);
    assert!(
        min_busy_rate <= 60.0,
        "rate {} never degraded below 60/s",
        min_busy_rate
    );

    let recovered = run
        .timeline
        .iter()
        .filter(|r| r.time_s > 272.0 && r.queue_len > 100 && r.queue_len < 4000)
        .map(|r| r.proc_rate_pps)
        .fold(0.0f64, f64::max);
    assert!(
        recovered >= 95.0,
        "rate {} never recovered to nominal during drain",
        recovered
    );

    // Degraded service stretches the drain well past the nominal 90 s.
    let report = metrics::summarize(&run).unwrap();
    assert!(report.drain_time_s.unwrap() > 100.0);
}

#[test]
fn attack60_collateral_matches_drop_windows() {
    // Two 30 s drop windows discard two devices' 1/s telemetry: 120
    // benign packets, give or take tick/boundary alignment.
    let run = runner::run_sim(&preset("attack60-mitigation").unwrap(), 0).unwrap();
    let report = metrics::summarize(&run).unwrap();
    assert_eq!(run.stats.activation_count, 2);
    assert!(
        (117..=123).contains(&report.benign_collateral),
        "collateral {} away from the expected ~120",
        report.benign_collateral
    );
    // Flood packets overwhelmingly die in the windows.
    assert!(report.flood_discarded > 55_000);
    // The second decision follows the first by one drop window plus the
    // few batches of re-detection.
    let gap = report.activations_s[1] - report.activations_s[0];
    assert!(
        (30.0..31.0).contains(&gap),
        "re-activation gap {gap:.3}s outside [30, 31)"
    );
}

#[test]
fn training_uses_only_pre_attack_benign_packets() {
    let scenario = preset("attack10-nomitigation").unwrap();
    let attack_start = 260.0;
    for seed in 0..3 {
        let run = runner::run_sim(&scenario, seed).unwrap();
        let truth = run.truth_map();
        assert_eq!(run.stats.training_keys.len(), 500);
        for key in &run.stats.training_keys {
            let kind = truth[&(key[0], key[1])];
            assert_eq!(kind, PacketKind::Telemetry, "flood packet in training set");
        }
        // Emitted before the attack interval opened.
        let emit_by_key: std::collections::HashMap<(u32, u32), f64> = run
            .truth
            .iter()
            .map(|r| ((r.source, r.seq), r.emit_time_s))
            .collect();
        for key in &run.stats.training_keys {
            assert!(emit_by_key[&(key[0], key[1])] < attack_start);
        }
    }
}

#[test]
fn truncated_run_reports_incomplete() {
    // Cut the run off mid-backlog: the report must flag partial coverage.
    let mut scenario = preset("attack10-nomitigation").unwrap();
    scenario.duration_s = 300.0; // drain would need ~360 s
    let run = runner::run_sim(&scenario, 0).unwrap();
    let report = metrics::summarize(&run).unwrap();
    assert!(!report.complete);
    assert_eq!(report.drain_time_s, None);
    assert!(run.stats.final_queue_len > 0);
}

#[test]
fn probabilistic_plan_attacks_after_training_gate() {
    let scenario = preset("probabilistic").unwrap();
    for seed in 0..5 {
        let run = runner::run_sim(&scenario, seed).unwrap();
        for iv in &run.stats.attack_intervals_s {
            assert!(iv[0] >= 260.0, "attack at {} began before the gate", iv[0]);
        }
        // Flood truth only inside resolved intervals.
        for r in &run.truth {
            if r.kind == PacketKind::Flood {
                assert!(
                    run.stats
                        .attack_intervals_s
                        .iter()
                        .any(|iv| r.emit_time_s >= iv[0] && r.emit_time_s < iv[1]),
                    "flood packet at {}s outside every interval",
                    r.emit_time_s
                );
            }
        }
    }
}
