//! Persisted run artifacts: CSV tables, the run manifest, counters, and
//! the trained model dump.
//!
//! Every report number is recomputable from these files alone, so the
//! writers fix exact column names and float formatting. Timestamps are
//! written as seconds with six decimals, which is lossless for the
//! microsecond-resolution clock.

use crate::error::RunError;
use crate::ids::{AutoAssocRnn, Label};
use crate::mitigation::MitigationEventKind;
use crate::pipeline::DropCause;
use crate::scenario::Scenario;
use crate::traffic::PacketKind;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

pub const TIMELINE_CSV: &str = "timeline.csv";
pub const DECISIONS_CSV: &str = "decisions.csv";
pub const MEMBERS_CSV: &str = "batch_members.csv";
pub const EVENTS_CSV: &str = "events.csv";
pub const DROPS_CSV: &str = "drops.csv";
pub const TRUTH_CSV: &str = "ground_truth.csv";
pub const MANIFEST_JSON: &str = "manifest.json";
pub const STATS_JSON: &str = "run_stats.json";
pub const MODEL_JSON: &str = "model.json";
pub const REPORT_JSON: &str = "report.json";

pub const TIMELINE_HEADER: &str = "time_s,queue_len,proc_rate_pps,delay_ms,mitigation_active";
pub const DECISIONS_HEADER: &str = "batch_id,decide_time_s,score,label,gamma";
pub const MEMBERS_HEADER: &str = "batch_id,source,seq";
pub const EVENTS_HEADER: &str = "event_time_s,event,flushed,dropped_since_last";
pub const DROPS_HEADER: &str = "time_s,source,seq,cause";
pub const TRUTH_HEADER: &str = "source,seq,kind,emit_time_s";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimelineRow {
    pub time_s: f64,
    pub queue_len: u64,
    pub proc_rate_pps: f64,
    pub delay_ms: f64,
    pub mitigation_active: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionRow {
    pub batch_id: u64,
    pub decide_time_s: f64,
    pub score: f64,
    pub label: Label,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberRow {
    pub batch_id: u64,
    pub source: u32,
    pub seq: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventRow {
    pub event_time_s: f64,
    pub event: MitigationEventKind,
    pub flushed: u64,
    pub dropped_since_last: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DropRow {
    pub time_s: f64,
    pub source: u32,
    pub seq: u32,
    pub cause: DropCause,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub source: u32,
    pub seq: u32,
    pub kind: PacketKind,
    pub emit_time_s: f64,
}

/// Everything that pins a run: scenario, seed, and artifact version.
/// Identical manifests replay sim-mode runs byte-identically
/// (`started_at_unix` is informational and excluded from that contract).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub scenario: Scenario,
    pub seed: u64,
    pub started_at_unix: Option<u64>,
}

/// Raw counters captured at run end, persisted next to the CSV logs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunStats {
    pub emitted: u64,
    pub transport_delivered: u64,
    pub transport_dropped: u64,
    pub skipped_malformed: u64,
    /// Emitted but neither delivered nor dropped by run end (in flight at
    /// shutdown, or lost in the OS buffer in live mode).
    pub undelivered: u64,
    pub enqueued: u64,
    pub dequeued: u64,
    pub flushed: u64,
    pub tail_dropped: u64,
    pub processed_normal: u64,
    pub final_queue_len: u64,
    /// Exact maximum queue length (tracked per enqueue, not sampled).
    pub peak_queue: u64,
    pub trained_at_s: Option<f64>,
    /// (source, seq) of every packet the detector trained on, for audit.
    pub training_keys: Vec<[u32; 2]>,
    pub activation_count: u64,
    /// Attack intervals as resolved for this run (sampled plans differ by
    /// seed), in seconds.
    pub attack_intervals_s: Vec<[f64; 2]>,
    pub effective_recv_buffer: Option<usize>,
    /// Worst sender scheduling lateness in live mode; bounds how far
    /// inter-emission gaps compressed below the telemetry period.
    pub sender_max_lateness_ms: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct RunArtifacts {
    pub manifest: Option<RunManifest>,
    pub timeline: Vec<TimelineRow>,
    pub decisions: Vec<DecisionRow>,
    pub members: Vec<MemberRow>,
    pub events: Vec<EventRow>,
    pub drops: Vec<DropRow>,
    pub truth: Vec<TruthRow>,
    pub stats: RunStats,
    pub model: Option<AutoAssocRnn>,
}

impl RunArtifacts {
    /// Truth kind lookup keyed by (source, seq).
    pub fn truth_map(&self) -> HashMap<(u32, u32), PacketKind> {
        self.truth
            .iter()
            .map(|r| ((r.source, r.seq), r.kind))
            .collect()
    }

    /// Member packets grouped per batch id, in row order.
    pub fn members_by_batch(&self) -> HashMap<u64, Vec<(u32, u32)>> {
        let mut map: HashMap<u64, Vec<(u32, u32)>> = HashMap::new();
        for m in &self.members {
            map.entry(m.batch_id).or_default().push((m.source, m.seq));
        }
        map
    }
}

pub fn label_str(label: Label) -> &'static str {
    match label {
        Label::Normal => "Normal",
        Label::Attack => "Attack",
    }
}

fn parse_label(s: &str) -> Result<Label, RunError> {
    match s {
        "Normal" => Ok(Label::Normal),
        "Attack" => Ok(Label::Attack),
        other => Err(parse_err("label", other)),
    }
}

pub fn kind_str(kind: PacketKind) -> &'static str {
    match kind {
        PacketKind::Telemetry => "telemetry",
        PacketKind::Flood => "flood",
    }
}

fn parse_kind(s: &str) -> Result<PacketKind, RunError> {
    match s {
        "telemetry" => Ok(PacketKind::Telemetry),
        "flood" => Ok(PacketKind::Flood),
        other => Err(parse_err("kind", other)),
    }
}

fn event_str(kind: MitigationEventKind) -> &'static str {
    match kind {
        MitigationEventKind::Activate => "activate",
        MitigationEventKind::Deadline => "deadline",
    }
}

fn parse_event(s: &str) -> Result<MitigationEventKind, RunError> {
    match s {
        "activate" => Ok(MitigationEventKind::Activate),
        "deadline" => Ok(MitigationEventKind::Deadline),
        other => Err(parse_err("event", other)),
    }
}

fn cause_str(cause: DropCause) -> &'static str {
    match cause {
        DropCause::Flush => "flush",
        DropCause::Window => "window",
        DropCause::Tail => "tail",
    }
}

fn parse_cause(s: &str) -> Result<DropCause, RunError> {
    match s {
        "flush" => Ok(DropCause::Flush),
        "window" => Ok(DropCause::Window),
        "tail" => Ok(DropCause::Tail),
        other => Err(parse_err("cause", other)),
    }
}

fn parse_err(field: &str, value: &str) -> RunError {
    RunError::Contract(format!("artifact parse: bad {field} {value:?}"))
}

fn parse_field<T: std::str::FromStr>(field: &str, value: &str) -> Result<T, RunError> {
    value.parse().map_err(|_| parse_err(field, value))
}

pub fn timeline_to_csv(rows: &[TimelineRow]) -> String {
    let mut out = String::from(TIMELINE_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{:.6},{},{:.3},{:.6},{}",
            r.time_s, r.queue_len, r.proc_rate_pps, r.delay_ms, r.mitigation_active
        );
    }
    out
}

pub fn timeline_from_csv(text: &str) -> Result<Vec<TimelineRow>, RunError> {
    parse_csv(text, TIMELINE_HEADER, 5, |f| {
        Ok(TimelineRow {
            time_s: parse_field("time_s", f[0])?,
            queue_len: parse_field("queue_len", f[1])?,
            proc_rate_pps: parse_field("proc_rate_pps", f[2])?,
            delay_ms: parse_field("delay_ms", f[3])?,
            mitigation_active: parse_field("mitigation_active", f[4])?,
        })
    })
}

pub fn decisions_to_csv(rows: &[DecisionRow]) -> String {
    let mut out = String::from(DECISIONS_HEADER);
    out.push('\n');
    for r in rows {
        // Score and gamma print shortest-round-trip so reloading loses
        // nothing.
        let _ = writeln!(
            out,
            "{},{:.6},{},{},{}",
            r.batch_id,
            r.decide_time_s,
            r.score,
            label_str(r.label),
            r.gamma
        );
    }
    out
}

pub fn decisions_from_csv(text: &str) -> Result<Vec<DecisionRow>, RunError> {
    parse_csv(text, DECISIONS_HEADER, 5, |f| {
        Ok(DecisionRow {
            batch_id: parse_field("batch_id", f[0])?,
            decide_time_s: parse_field("decide_time_s", f[1])?,
            score: parse_field("score", f[2])?,
            label: parse_label(f[3])?,
            gamma: parse_field("gamma", f[4])?,
        })
    })
}

pub fn members_to_csv(rows: &[MemberRow]) -> String {
    let mut out = String::from(MEMBERS_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.batch_id, r.source, r.seq);
    }
    out
}

pub fn members_from_csv(text: &str) -> Result<Vec<MemberRow>, RunError> {
    parse_csv(text, MEMBERS_HEADER, 3, |f| {
        Ok(MemberRow {
            batch_id: parse_field("batch_id", f[0])?,
            source: parse_field("source", f[1])?,
            seq: parse_field("seq", f[2])?,
        })
    })
}

pub fn events_to_csv(rows: &[EventRow]) -> String {
    let mut out = String::from(EVENTS_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{:.6},{},{},{}",
            r.event_time_s,
            event_str(r.event),
            r.flushed,
            r.dropped_since_last
        );
    }
    out
}

pub fn events_from_csv(text: &str) -> Result<Vec<EventRow>, RunError> {
    parse_csv(text, EVENTS_HEADER, 4, |f| {
        Ok(EventRow {
            event_time_s: parse_field("event_time_s", f[0])?,
            event: parse_event(f[1])?,
            flushed: parse_field("flushed", f[2])?,
            dropped_since_last: parse_field("dropped_since_last", f[3])?,
        })
    })
}

pub fn drops_to_csv(rows: &[DropRow]) -> String {
    let mut out = String::from(DROPS_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{:.6},{},{},{}",
            r.time_s,
            r.source,
            r.seq,
            cause_str(r.cause)
        );
    }
    out
}

pub fn drops_from_csv(text: &str) -> Result<Vec<DropRow>, RunError> {
    parse_csv(text, DROPS_HEADER, 4, |f| {
        Ok(DropRow {
            time_s: parse_field("time_s", f[0])?,
            source: parse_field("source", f[1])?,
            seq: parse_field("seq", f[2])?,
            cause: parse_cause(f[3])?,
        })
    })
}

pub fn truth_to_csv(rows: &[TruthRow]) -> String {
    let mut out = String::from(TRUTH_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{:.6}",
            r.source,
            r.seq,
            kind_str(r.kind),
            r.emit_time_s
        );
    }
    out
}

pub fn truth_from_csv(text: &str) -> Result<Vec<TruthRow>, RunError> {
    parse_csv(text, TRUTH_HEADER, 4, |f| {
        Ok(TruthRow {
            source: parse_field("source", f[0])?,
            seq: parse_field("seq", f[1])?,
            kind: parse_kind(f[2])?,
            emit_time_s: parse_field("emit_time_s", f[3])?,
        })
    })
}

fn parse_csv<T>(
    text: &str,
    header: &str,
    fields: usize,
    mut row: impl FnMut(&[&str]) -> Result<T, RunError>,
) -> Result<Vec<T>, RunError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == header => {}
        other => {
            return Err(RunError::Contract(format!(
                "artifact parse: expected header {header:?}, got {other:?}"
            )))
        }
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != fields {
            return Err(RunError::Contract(format!(
                "artifact parse: line {} has {} fields, expected {fields}",
                i + 2,
                parts.len()
            )));
        }
        out.push(row(&parts)?);
    }
    Ok(out)
}

/// Write every artifact file into `dir` (created if missing). Charts and
/// the report are written separately by their producers.
pub fn write_run_dir(dir: &Path, artifacts: &RunArtifacts) -> Result<(), RunError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(TIMELINE_CSV), timeline_to_csv(&artifacts.timeline))?;
    std::fs::write(
        dir.join(DECISIONS_CSV),
        decisions_to_csv(&artifacts.decisions),
    )?;
    std::fs::write(dir.join(MEMBERS_CSV), members_to_csv(&artifacts.members))?;
    std::fs::write(dir.join(EVENTS_CSV), events_to_csv(&artifacts.events))?;
    std::fs::write(dir.join(DROPS_CSV), drops_to_csv(&artifacts.drops))?;
    std::fs::write(dir.join(TRUTH_CSV), truth_to_csv(&artifacts.truth))?;
    let stats = serde_json::to_string_pretty(&artifacts.stats)
        .map_err(|e| RunError::Contract(format!("stats serialize: {e}")))?;
    std::fs::write(dir.join(STATS_JSON), stats)?;
    if let Some(manifest) = &artifacts.manifest {
        let text = serde_json::to_string_pretty(manifest)
            .map_err(|e| RunError::Contract(format!("manifest serialize: {e}")))?;
        std::fs::write(dir.join(MANIFEST_JSON), text)?;
    }
    if let Some(model) = &artifacts.model {
        model.save(&dir.join(MODEL_JSON))?;
    }
    Ok(())
}

/// Load a run directory back into memory; the inverse of `write_run_dir`.
pub fn load_run_dir(dir: &Path) -> Result<RunArtifacts, RunError> {
    let read = |name: &str| -> Result<String, RunError> {
        std::fs::read_to_string(dir.join(name)).map_err(RunError::from)
    };
    let stats: RunStats = serde_json::from_str(&read(STATS_JSON)?)
        .map_err(|e| RunError::Contract(format!("stats parse: {e}")))?;
    let manifest = match std::fs::read_to_string(dir.join(MANIFEST_JSON)) {
        Ok(text) => Some(
            serde_json::from_str(&text)
                .map_err(|e| RunError::Contract(format!("manifest parse: {e}")))?,
        ),
        Err(_) => None,
    };
    let model = if dir.join(MODEL_JSON).exists() {
        Some(AutoAssocRnn::load(&dir.join(MODEL_JSON))?)
    } else {
        None
    };
    Ok(RunArtifacts {
        manifest,
        timeline: timeline_from_csv(&read(TIMELINE_CSV)?)?,
        decisions: decisions_from_csv(&read(DECISIONS_CSV)?)?,
        members: members_from_csv(&read(MEMBERS_CSV)?)?,
        events: events_from_csv(&read(EVENTS_CSV)?)?,
        drops: drops_from_csv(&read(DROPS_CSV)?)?,
        truth: truth_from_csv(&read(TRUTH_CSV)?)?,
        stats,
        model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timeline_header_is_pinned() {
        let csv = timeline_to_csv(&[]);
        assert_eq!(
            csv,
            "time_s,queue_len,proc_rate_pps,delay_ms,mitigation_active\n"
        );
    }

    #[test]
    fn timeline_rows_round_trip() {
        let rows = vec![
            TimelineRow {
                time_s: 0.1,
                queue_len: 0,
                proc_rate_pps: 0.0,
                delay_ms: 0.0,
                mitigation_active: false,
            },
            TimelineRow {
                time_s: 260.700001,
                queue_len: 8123,
                proc_rate_pps: 100.0,
                delay_ms: 41.25,
                mitigation_active: true,
            },
        ];
        let parsed = timeline_from_csv(&timeline_to_csv(&rows)).unwrap();
        assert_eq!(parsed, rows);
    }

    #[test]
    fn decision_and_member_rows_round_trip() {
        let decisions = vec![DecisionRow {
            batch_id: 3,
            decide_time_s: 251.02,
            score: 0.712345,
            label: Label::Attack,
            gamma: 0.3,
        }];
        let parsed = decisions_from_csv(&decisions_to_csv(&decisions)).unwrap();
        assert_eq!(parsed[0].batch_id, 3);
        assert_eq!(parsed[0].label, Label::Attack);
        assert_eq!(parsed[0].decide_time_s, 251.02);

        let members = vec![
            MemberRow {
                batch_id: 3,
                source: 2,
                seq: 710,
            },
            MemberRow {
                batch_id: 3,
                source: 1,
                seq: 260,
            },
        ];
        assert_eq!(
            members_from_csv(&members_to_csv(&members)).unwrap(),
            members
        );
    }

    #[test]
    fn rejects_wrong_header_and_ragged_rows() {
        assert!(timeline_from_csv("nope\n1,2,3,4,5\n").is_err());
        let bad = format!("{TIMELINE_HEADER}\n1.0,2,3.0\n");
        assert!(timeline_from_csv(&bad).is_err());
    }

    #[test]
    fn event_and_drop_rows_round_trip() {
        let events = vec![
            EventRow {
                event_time_s: 260.031,
                event: MitigationEventKind::Activate,
                flushed: 11,
                dropped_since_last: 0,
            },
            EventRow {
                event_time_s: 290.031,
                event: MitigationEventKind::Deadline,
                flushed: 0,
                dropped_since_last: 29970,
            },
        ];
        assert_eq!(events_from_csv(&events_to_csv(&events)).unwrap(), events);

        let drops = vec![DropRow {
            time_s: 260.0311,
            source: 2,
            seq: 99,
            cause: DropCause::Window,
        }];
        assert_eq!(drops_from_csv(&drops_to_csv(&drops)).unwrap(), drops);
    }

    #[test]
    fn truth_rows_round_trip() {
        let rows = vec![
            TruthRow {
                source: 1,
                seq: 0,
                kind: PacketKind::Telemetry,
                emit_time_s: 0.482117,
            },
            TruthRow {
                source: 2,
                seq: 7,
                kind: PacketKind::Flood,
                emit_time_s: 260.002,
            },
        ];
        assert_eq!(truth_from_csv(&truth_to_csv(&rows)).unwrap(), rows);
    }
}
