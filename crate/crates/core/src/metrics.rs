//! Confusion statistics and the per-run summary report.
//!
//! Batch ground truth is a strict majority vote over the member packets'
//! true kinds; decisions join to truth through `(source, seq)` keys, never
//! through timestamps, so late decisions under overload still evaluate
//! against the right packets.

use crate::artifacts::{RunArtifacts, REPORT_JSON};
use crate::error::RunError;
use crate::ids::Label;
use crate::mitigation::MitigationEventKind;
use crate::pipeline::DropCause;
use crate::traffic::PacketKind;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Queue length below which the backlog counts as drained.
pub const DRAIN_THRESHOLD: u64 = 5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn record(&mut self, truth_attack: bool, decided_attack: bool) {
        match (truth_attack, decided_attack) {
            (true, true) => self.tp += 1,
            (true, false) => self.fn_ += 1,
            (false, true) => self.fp += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn merge(&mut self, other: &ConfusionCounts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.tn += other.tn;
        self.fn_ += other.fn_;
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// None when the denominator is empty (reported as a NaN flag).
    pub fn accuracy(&self) -> Option<f64> {
        let d = self.total();
        (d > 0).then(|| (self.tp + self.tn) as f64 / d as f64)
    }

    pub fn tpr(&self) -> Option<f64> {
        let d = self.tp + self.fn_;
        (d > 0).then(|| self.tp as f64 / d as f64)
    }

    pub fn tnr(&self) -> Option<f64> {
        let d = self.tn + self.fp;
        (d > 0).then(|| self.tn as f64 / d as f64)
    }

    pub fn summary(&self) -> ConfusionSummary {
        ConfusionSummary {
            tp: self.tp,
            fp: self.fp,
            tn: self.tn,
            fn_: self.fn_,
            accuracy: self.accuracy(),
            tpr: self.tpr(),
            tnr: self.tnr(),
            accuracy_defined: self.accuracy().is_some(),
            tpr_defined: self.tpr().is_some(),
            tnr_defined: self.tnr().is_some(),
        }
    }
}

/// Confusion counts plus derived rates; undefined rates serialize as null
/// with an explicit flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionSummary {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
    pub accuracy: Option<f64>,
    pub tpr: Option<f64>,
    pub tnr: Option<f64>,
    pub accuracy_defined: bool,
    pub tpr_defined: bool,
    pub tnr_defined: bool,
}

/// A batch's true label: attack iff a strict majority of its member
/// packets are flood packets.
pub fn batch_truth(kinds: &[PacketKind]) -> Label {
    let floods = kinds.iter().filter(|k| **k == PacketKind::Flood).count();
    if floods * 2 > kinds.len() {
        Label::Attack
    } else {
        Label::Normal
    }
}

/// Join decisions to ground truth and count the confusion matrix. Any
/// member packet missing from the truth log is an evaluation-integrity
/// error.
pub fn evaluate(artifacts: &RunArtifacts) -> Result<ConfusionCounts, RunError> {
    let truth = artifacts.truth_map();
    let members = artifacts.members_by_batch();
    let mut counts = ConfusionCounts::default();
    for d in &artifacts.decisions {
        let keys = members.get(&d.batch_id).ok_or_else(|| {
            RunError::Evaluation(format!("batch {} has no member rows", d.batch_id))
        })?;
        let mut kinds = Vec::with_capacity(keys.len());
        for &(source, seq) in keys {
            let kind = truth.get(&(source, seq)).ok_or_else(|| {
                RunError::Evaluation(format!(
                    "packet ({source}, {seq}) in batch {} missing from ground truth",
                    d.batch_id
                ))
            })?;
            kinds.push(*kind);
        }
        counts.record(
            batch_truth(&kinds) == Label::Attack,
            d.label == Label::Attack,
        );
    }
    Ok(counts)
}

/// Structured per-run summary; every field is a pure function of the
/// persisted artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub gamma: f64,
    /// False when the log ends before the backlog drained.
    pub complete: bool,
    pub confusion: ConfusionSummary,
    pub batches: u64,
    /// Exact peak queue length from the run counters.
    pub peak_queue: u64,
    /// Peak as visible to the 100 ms sampler.
    pub peak_queue_sampled: u64,
    /// Seconds from the end of the last attack interval until the queue
    /// first sampled below the drain threshold.
    pub drain_time_s: Option<f64>,
    pub attack_intervals_s: Vec<[f64; 2]>,
    pub activations_s: Vec<f64>,
    pub deadlines_s: Vec<f64>,
    /// Telemetry packets lost to flushes and drop windows.
    pub benign_collateral: u64,
    /// Flood packets removed by flushes and drop windows.
    pub flood_discarded: u64,
    pub training_residual: Option<f64>,
    pub stats: crate::artifacts::RunStats,
}

/// Compute the report from artifacts. Deterministic: recomputing from a
/// reloaded run directory reproduces it exactly.
pub fn summarize(artifacts: &RunArtifacts) -> Result<RunReport, RunError> {
    let confusion = evaluate(artifacts)?;
    let scenario = artifacts
        .manifest
        .as_ref()
        .map(|m| m.scenario.name.clone())
        .unwrap_or_else(|| "unknown".to_string());
    let gamma = artifacts
        .decisions
        .first()
        .map(|d| d.gamma)
        .or_else(|| artifacts.manifest.as_ref().map(|m| m.scenario.gamma))
        .unwrap_or(crate::ids::DEFAULT_GAMMA);

    let peak_queue_sampled = artifacts
        .timeline
        .iter()
        .map(|r| r.queue_len)
        .max()
        .unwrap_or(0);

    let attack_intervals_s = artifacts.stats.attack_intervals_s.clone();
    let last_attack_end = attack_intervals_s
        .iter()
        .map(|iv| iv[1])
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.max(v)))
        });
    let drain_time_s = last_attack_end.and_then(|end| {
        artifacts
            .timeline
            .iter()
            .find(|r| r.time_s >= end && r.queue_len < DRAIN_THRESHOLD)
            .map(|r| r.time_s - end)
    });

    let activations_s: Vec<f64> = artifacts
        .events
        .iter()
        .filter(|e| e.event == MitigationEventKind::Activate)
        .map(|e| e.event_time_s)
        .collect();
    let deadlines_s: Vec<f64> = artifacts
        .events
        .iter()
        .filter(|e| e.event == MitigationEventKind::Deadline)
        .map(|e| e.event_time_s)
        .collect();

    let truth = artifacts.truth_map();
    let mut benign_collateral = 0u64;
    let mut flood_discarded = 0u64;
    for d in &artifacts.drops {
        if d.cause == DropCause::Tail {
            continue;
        }
        match truth.get(&(d.source, d.seq)) {
            Some(PacketKind::Telemetry) => benign_collateral += 1,
            Some(PacketKind::Flood) => flood_discarded += 1,
            None => {
                return Err(RunError::Evaluation(format!(
                    "dropped packet ({}, {}) missing from ground truth",
                    d.source, d.seq
                )))
            }
        }
    }

    // Complete when the timeline extends past the last attack and the
    // backlog was seen draining (or there was no attack at all).
    let complete = !artifacts.timeline.is_empty()
        && match last_attack_end {
            None => true,
            Some(_) => drain_time_s.is_some(),
        };

    Ok(RunReport {
        scenario,
        gamma,
        complete,
        confusion: confusion.summary(),
        batches: artifacts.decisions.len() as u64,
        peak_queue: artifacts.stats.peak_queue,
        peak_queue_sampled,
        drain_time_s,
        attack_intervals_s,
        activations_s,
        deadlines_s,
        benign_collateral,
        flood_discarded,
        training_residual: artifacts.model.as_ref().map(|m| m.training_residual),
        stats: artifacts.stats.clone(),
    })
}

pub fn write_report(dir: &Path, report: &RunReport) -> Result<(), RunError> {
    let text = serde_json::to_string_pretty(report)
        .map_err(|e| RunError::Contract(format!("report serialize: {e}")))?;
    std::fs::write(dir.join(REPORT_JSON), text)?;
    Ok(())
}

pub fn load_report(dir: &Path) -> Result<RunReport, RunError> {
    let text = std::fs::read_to_string(dir.join(REPORT_JSON))?;
    serde_json::from_str(&text).map_err(|e| RunError::Contract(format!("report parse: {e}")))
}

/// One row of a threshold sweep table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub gamma: f64,
    pub confusion: ConfusionSummary,
}

/// The accuracy-maximizing threshold of a sweep, if any row has defined
/// accuracy.
pub fn sweep_best(rows: &[SweepRow]) -> Option<f64> {
    rows.iter()
        .filter_map(|r| r.confusion.accuracy.map(|a| (r.gamma, a)))
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
        .map(|(g, _)| g)
}

/// Aggregate confusion over many runs (seed sweeps).
pub fn merge_confusions<'a>(iter: impl Iterator<Item = &'a ConfusionCounts>) -> ConfusionCounts {
    let mut out = ConfusionCounts::default();
    for c in iter {
        out.merge(c);
    }
    out
}
