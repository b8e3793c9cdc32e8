//! Scenario execution.
//!
//! Sim mode drives everything from one deterministic event loop over
//! virtual time; live mode binds loopback sockets and replays the same
//! precomputed emission timelines against the wall clock. Both feed the
//! same server core: buffer, detector, mitigation, and instrumentation.

use crate::artifacts::{
    DecisionRow, DropRow, EventRow, MemberRow, RunArtifacts, RunManifest, RunStats, TruthRow,
};
use crate::chart;
use crate::error::RunError;
use crate::ids::{
    decide, score, AutoAssocRnn, DetectorConfig, Label, MetricExtractor, TrainingBuffer,
};
use crate::metrics::{self, RunReport, SweepRow};
use crate::mitigation::{Action, MitigationEventKind, MitigationState};
use crate::pipeline::{DropCause, InputBuffer, QueuedPacket, ServiceConfig, TimelineLog};
use crate::scenario::{PlanMode, Scenario, TransportMode};
use crate::time::{SimDuration, SimTime};
use crate::traffic::{AttackInterval, DeviceGenerator, GroundTruthLog, PacketRecord};
use crate::transport::{live, SimTransport};
use std::fmt::Write as _;
use std::path::Path;

/// What the consumer is doing right now.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ConsumerState {
    Idle,
    /// Classifying the in-flight batch until the given instant.
    Serving {
        until: SimTime,
    },
    /// Content-processing a normal batch until the given instant.
    Finishing {
        until: SimTime,
    },
}

struct ActivationInfo {
    flushed: u64,
}

#[derive(Default)]
struct CompleteOutcome {
    activation: Option<ActivationInfo>,
}

enum DetectorPhase {
    Training(TrainingBuffer),
    Scoring(AutoAssocRnn),
}

/// The server of the test-bed: input buffer feeding the detector in
/// batches, decision post-processing, and the mitigation hook. Never
/// reads a packet's truth kind.
struct ServerCore {
    service: ServiceConfig,
    detector_cfg: DetectorConfig,
    gamma: f64,
    seed: u64,
    buffer: InputBuffer,
    extractor: MetricExtractor,
    phase: DetectorPhase,
    batch_scores: Vec<f64>,
    batch_keys: Vec<(u32, u32)>,
    next_batch_id: u64,
    mitigation_enabled: bool,
    mitigation: MitigationState,
    in_flight: Vec<QueuedPacket>,
    state: ConsumerState,
    timeline: TimelineLog,
    decisions: Vec<DecisionRow>,
    members: Vec<MemberRow>,
    drops: Vec<DropRow>,
    processed_normal: u64,
    trained_at: Option<SimTime>,
    training_keys: Vec<(u32, u32)>,
    model: Option<AutoAssocRnn>,
}

impl ServerCore {
    fn new(scenario: &Scenario, seed: u64) -> ServerCore {
        let service = scenario.service_config();
        ServerCore {
            buffer: InputBuffer::new(service.buffer_capacity),
            extractor: MetricExtractor::new(scenario.extractor_config()),
            phase: DetectorPhase::Training(TrainingBuffer::new(scenario.ids.training_packets)),
            batch_scores: Vec::new(),
            batch_keys: Vec::new(),
            next_batch_id: 0,
            mitigation_enabled: scenario.mitigation.enabled,
            mitigation: MitigationState::new(scenario.mitigation_config()),
            in_flight: Vec::new(),
            state: ConsumerState::Idle,
            timeline: TimelineLog::new(),
            decisions: Vec::new(),
            members: Vec::new(),
            drops: Vec::new(),
            processed_normal: 0,
            trained_at: None,
            training_keys: Vec::new(),
            model: None,
            detector_cfg: scenario.detector_config(),
            gamma: scenario.gamma,
            seed,
            service,
        }
    }

    fn on_arrival(&mut self, packet: PacketRecord, now: SimTime) {
        let source = packet.source;
        let seq = packet.seq;
        if !self.buffer.enqueue(packet, now) {
            self.drops.push(DropRow {
                time_s: now.as_secs_f64(),
                source,
                seq,
                cause: DropCause::Tail,
            });
        }
    }

    fn record_window_drop(&mut self, packet: &PacketRecord, now: SimTime) {
        self.drops.push(DropRow {
            time_s: now.as_secs_f64(),
            source: packet.source,
            seq: packet.seq,
            cause: DropCause::Window,
        });
    }

    /// Begin a batch when idle and work is queued. Per-packet queueing
    /// delay is recorded here, at dequeue.
    fn try_start_service(&mut self, now: SimTime) {
        if self.state != ConsumerState::Idle || self.buffer.is_empty() {
            return;
        }
        let cost = self.service.batch_cost(self.buffer.len());
        let batch = self.buffer.dequeue_batch(self.service.batch_size);
        for qp in &batch {
            self.timeline.on_dequeue(now, now - qp.arrival);
        }
        self.in_flight = batch;
        self.state = ConsumerState::Serving { until: now + cost };
    }

    fn next_consumer_event(&self) -> Option<SimTime> {
        match self.state {
            ConsumerState::Idle => None,
            ConsumerState::Serving { until } | ConsumerState::Finishing { until } => Some(until),
        }
    }

    fn on_consumer_event(&mut self, now: SimTime) -> Result<CompleteOutcome, RunError> {
        match self.state {
            ConsumerState::Serving { until } => {
                debug_assert!(now >= until);
                self.process_batch(now)
            }
            ConsumerState::Finishing { until } => {
                debug_assert!(now >= until);
                self.state = ConsumerState::Idle;
                Ok(CompleteOutcome::default())
            }
            ConsumerState::Idle => {
                Err(RunError::Contract("consumer event fired while idle".into()))
            }
        }
    }

    /// Classification of the in-flight batch completes at `now`: extract
    /// metrics per packet in FIFO order, feed training or scoring, form
    /// decisions every `batch_size` scores, and drive the mitigation
    /// window on the broadcast per-packet labels.
    fn process_batch(&mut self, now: SimTime) -> Result<CompleteOutcome, RunError> {
        let batch = std::mem::take(&mut self.in_flight);
        let mut outcome = CompleteOutcome::default();
        let mut content_packets: u64 = 0;

        for qp in &batch {
            if outcome.activation.is_some() {
                // The rest of the in-flight batch is discarded along with
                // the flushed buffer.
                self.drops.push(DropRow {
                    time_s: now.as_secs_f64(),
                    source: qp.packet.source,
                    seq: qp.packet.seq,
                    cause: DropCause::Flush,
                });
                continue;
            }
            let x = self.extractor.push(qp.arrival, qp.packet.wire_len());
            let key = (qp.packet.source, qp.packet.seq);

            let mut scored = None;
            match &mut self.phase {
                DetectorPhase::Training(buf) => {
                    buf.push(x, key);
                    content_packets += 1;
                }
                DetectorPhase::Scoring(model) => {
                    scored = Some(score(&x, &model.forward(&x)?));
                }
            }
            if let DetectorPhase::Training(buf) = &self.phase {
                if buf.is_full() {
                    let model = AutoAssocRnn::train(buf.vectors(), &self.detector_cfg, self.seed)?;
                    self.training_keys = buf.keys().to_vec();
                    self.trained_at = Some(now);
                    self.model = Some(model.clone());
                    self.phase = DetectorPhase::Scoring(model);
                }
            }

            let Some(s) = scored else { continue };
            self.batch_scores.push(s);
            self.batch_keys.push(key);
            if self.batch_scores.len() < self.service.batch_size {
                continue;
            }

            let d = decide(self.next_batch_id, &self.batch_scores, self.gamma, now);
            self.next_batch_id += 1;
            self.decisions.push(DecisionRow {
                batch_id: d.batch_id,
                decide_time_s: d.decide_time.as_secs_f64(),
                score: d.score,
                label: d.label,
                gamma: d.gamma,
            });
            for &(source, seq) in &self.batch_keys {
                self.members.push(MemberRow {
                    batch_id: d.batch_id,
                    source,
                    seq,
                });
            }
            self.batch_scores.clear();
            self.batch_keys.clear();

            if d.label == Label::Normal {
                content_packets += self.service.batch_size as u64;
            }

            if self.mitigation_enabled {
                // Broadcast the batch decision to its member packets; an
                // activation mid-broadcast clears the window anyway.
                for _ in 0..self.service.batch_size {
                    match self.mitigation.observe(d.label, now)? {
                        Action::None => {}
                        Action::ActivateDrop => {
                            let flushed = self.buffer.flush();
                            for fq in &flushed {
                                self.drops.push(DropRow {
                                    time_s: now.as_secs_f64(),
                                    source: fq.packet.source,
                                    seq: fq.packet.seq,
                                    cause: DropCause::Flush,
                                });
                            }
                            self.batch_scores.clear();
                            self.batch_keys.clear();
                            outcome.activation = Some(ActivationInfo {
                                flushed: flushed.len() as u64,
                            });
                            break;
                        }
                    }
                }
            }
        }

        self.processed_normal += content_packets;
        let extra = SimDuration::from_micros(
            self.service.content_processing_time.as_micros() * content_packets,
        );
        self.state = if extra.is_zero() {
            ConsumerState::Idle
        } else {
            ConsumerState::Finishing { until: now + extra }
        };
        Ok(outcome)
    }

    fn drop_deadline(&self) -> Option<SimTime> {
        self.mitigation.deadline()
    }

    fn handle_deadline(&mut self, now: SimTime) -> Result<(), RunError> {
        self.mitigation.on_deadline(now)
    }

    fn sample(&mut self, now: SimTime) -> Result<(), RunError> {
        if !self.buffer.conservation_holds() {
            return Err(RunError::Contract(format!(
                "packet conservation violated at {now}: enqueued {} != dequeued {} + flushed {} + queued {}",
                self.buffer.enqueue_count(),
                self.buffer.dequeue_count(),
                self.buffer.flush_count(),
                self.buffer.len()
            )));
        }
        self.timeline
            .sample(now, self.buffer.len(), self.mitigation.is_dropping());
        Ok(())
    }
}

/// Per-device emission timelines plus the merged resolved attack plan.
struct EmissionPlan {
    timelines: Vec<Vec<PacketRecord>>,
    truth: GroundTruthLog,
    resolved_intervals: Vec<AttackInterval>,
    emitted: u64,
}

fn build_emissions(scenario: &Scenario, seed: u64) -> Result<EmissionPlan, RunError> {
    let duration = scenario.duration();
    let mut truth = GroundTruthLog::new();
    let mut timelines = Vec::new();
    let mut resolved: Vec<AttackInterval> = Vec::new();
    let mut emitted = 0u64;
    for spec in &scenario.devices {
        let profile = spec.profile(&scenario.attack_plan);
        let mut gen = DeviceGenerator::new(profile.clone(), seed);
        let intervals = if profile.compromised {
            match scenario.attack_plan.mode {
                PlanMode::None => Vec::new(),
                PlanMode::Scheduled => scenario.scheduled_intervals(),
                PlanMode::Probabilistic => gen.sample_schedule(duration),
            }
        } else {
            Vec::new()
        };
        resolved.extend(intervals.iter().copied());
        let timeline = gen.timeline(duration, &intervals);
        emitted += timeline.len() as u64;
        for p in &timeline {
            truth.record(p)?;
        }
        timelines.push(timeline);
    }

    // Clip to run end and merge overlaps across devices for reporting.
    let horizon = SimTime::ZERO + duration;
    let mut clipped: Vec<AttackInterval> = resolved
        .into_iter()
        .filter(|iv| iv.start < horizon)
        .map(|iv| AttackInterval {
            start: iv.start,
            end: iv.end.min(horizon),
        })
        .collect();
    clipped.sort_by_key(|iv| (iv.start, iv.end));
    let mut merged: Vec<AttackInterval> = Vec::new();
    for iv in clipped {
        match merged.last_mut() {
            Some(last) if iv.start <= last.end => last.end = last.end.max(iv.end),
            _ => merged.push(iv),
        }
    }

    Ok(EmissionPlan {
        timelines,
        truth,
        resolved_intervals: merged,
        emitted,
    })
}

fn truth_rows(truth: &GroundTruthLog) -> Vec<TruthRow> {
    truth
        .entries()
        .iter()
        .map(|e| TruthRow {
            source: e.source,
            seq: e.seq,
            kind: e.kind,
            emit_time_s: e.emit_time.as_secs_f64(),
        })
        .collect()
}

fn manifest_for(scenario: &Scenario, seed: u64) -> RunManifest {
    RunManifest {
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        scenario: scenario.clone(),
        seed,
        started_at_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs()),
    }
}

/// Run a scenario in whichever transport mode it names.
pub fn run(scenario: &Scenario, seed: u64) -> Result<RunArtifacts, RunError> {
    match scenario.transport.mode {
        TransportMode::Sim => run_sim(scenario, seed),
        TransportMode::Live => run_live(scenario, seed),
    }
}

pub fn run_sim(scenario: &Scenario, seed: u64) -> Result<RunArtifacts, RunError> {
    run_sim_with_mutator(scenario, seed, |_| {})
}

/// Sim run with a hook that may corrupt packets after ground truth is
/// recorded and before delivery. Exists so tests can prove the server
/// path ignores the wire `kind` byte.
pub fn run_sim_with_mutator(
    scenario: &Scenario,
    seed: u64,
    mutate: impl Fn(&mut PacketRecord),
) -> Result<RunArtifacts, RunError> {
    scenario.validate()?;
    let plan = build_emissions(scenario, seed)?;
    let horizon = SimTime::ZERO + scenario.duration();

    let mut transport = SimTransport::from_config(&scenario.transport_config(), seed);
    for timeline in plan.timelines {
        for mut p in timeline {
            mutate(&mut p);
            transport.send(p);
        }
    }

    let mut core = ServerCore::new(scenario, seed);
    let sample_period = scenario.sample_period();
    let mut next_sample = SimTime::ZERO;
    let mut events: Vec<EventRow> = Vec::new();
    let mut drop_mark = 0u64;

    // Event ranks: deadline < arrival < consumer < sample, so a deadline
    // re-admits an arrival at the same instant (closed boundary) and a
    // sample observes the state after everything else at its timestamp.
    const RANK_DEADLINE: u8 = 0;
    const RANK_ARRIVAL: u8 = 1;
    const RANK_CONSUMER: u8 = 2;
    const RANK_SAMPLE: u8 = 3;

    loop {
        let mut best: Option<(SimTime, u8)> = None;
        let mut consider = |cand: Option<SimTime>, rank: u8| {
            if let Some(t) = cand {
                if best.is_none_or(|(bt, br)| (t, rank) < (bt, br)) {
                    best = Some((t, rank));
                }
            }
        };
        consider(core.drop_deadline(), RANK_DEADLINE);
        consider(transport.next_deliver_time(), RANK_ARRIVAL);
        consider(core.next_consumer_event(), RANK_CONSUMER);
        consider(Some(next_sample), RANK_SAMPLE);

        let Some((now, rank)) = best else { break };
        if now > horizon {
            break;
        }
        match rank {
            RANK_DEADLINE => {
                core.handle_deadline(now)?;
                transport.set_drop(false);
                events.push(EventRow {
                    event_time_s: now.as_secs_f64(),
                    event: MitigationEventKind::Deadline,
                    flushed: 0,
                    dropped_since_last: transport.dropped_count() - drop_mark,
                });
                drop_mark = transport.dropped_count();
            }
            RANK_ARRIVAL => {
                let arrival = transport.recv_next().expect("peeked delivery vanished");
                if arrival.dropped {
                    core.record_window_drop(&arrival.packet, arrival.time);
                } else {
                    core.on_arrival(arrival.packet, arrival.time);
                }
            }
            RANK_CONSUMER => {
                let outcome = core.on_consumer_event(now)?;
                if let Some(act) = outcome.activation {
                    transport.set_drop(true);
                    events.push(EventRow {
                        event_time_s: now.as_secs_f64(),
                        event: MitigationEventKind::Activate,
                        flushed: act.flushed,
                        dropped_since_last: transport.dropped_count() - drop_mark,
                    });
                    drop_mark = transport.dropped_count();
                }
            }
            RANK_SAMPLE => {
                core.sample(now)?;
                next_sample += sample_period;
            }
            _ => unreachable!(),
        }
        core.try_start_service(now);
    }

    // Delivery accounting must close exactly.
    let delivered = transport.delivered_count();
    if delivered != core.buffer.enqueue_count() + core.buffer.tail_drop_count() {
        return Err(RunError::Contract(format!(
            "delivered {} != enqueued {} + tail-dropped {}",
            delivered,
            core.buffer.enqueue_count(),
            core.buffer.tail_drop_count()
        )));
    }

    let stats = RunStats {
        emitted: plan.emitted,
        transport_delivered: delivered,
        transport_dropped: transport.dropped_count(),
        skipped_malformed: 0,
        undelivered: plan.emitted - delivered - transport.dropped_count(),
        enqueued: core.buffer.enqueue_count(),
        dequeued: core.buffer.dequeue_count(),
        flushed: core.buffer.flush_count(),
        tail_dropped: core.buffer.tail_drop_count(),
        processed_normal: core.processed_normal,
        final_queue_len: core.buffer.len() as u64,
        peak_queue: core.buffer.peak_len() as u64,
        trained_at_s: core.trained_at.map(|t| t.as_secs_f64()),
        training_keys: core.training_keys.iter().map(|&(s, q)| [s, q]).collect(),
        activation_count: core.mitigation.activation_count(),
        attack_intervals_s: plan
            .resolved_intervals
            .iter()
            .map(|iv| [iv.start.as_secs_f64(), iv.end.as_secs_f64()])
            .collect(),
        effective_recv_buffer: None,
        sender_max_lateness_ms: None,
    };

    Ok(RunArtifacts {
        manifest: Some(manifest_for(scenario, seed)),
        timeline: core
            .timeline
            .samples()
            .iter()
            .map(|s| crate::artifacts::TimelineRow {
                time_s: s.time.as_secs_f64(),
                queue_len: s.queue_len as u64,
                proc_rate_pps: s.proc_rate_pps,
                delay_ms: s.delay_ms,
                mitigation_active: s.mitigation_active,
            })
            .collect(),
        decisions: core.decisions,
        members: core.members,
        events,
        drops: core.drops,
        truth: truth_rows(&plan.truth),
        stats,
        model: core.model,
    })
}

pub fn run_live(scenario: &Scenario, seed: u64) -> Result<RunArtifacts, RunError> {
    scenario.validate()?;
    let plan = build_emissions(scenario, seed)?;
    let horizon = SimTime::ZERO + scenario.duration();
    let cfg = scenario.transport_config();

    let origin = std::time::Instant::now();
    let server = live::LiveServer::bind(cfg.port, cfg.recv_buffer_bytes, origin)?;
    let addr = server.local_addr();

    let mut senders = Vec::new();
    for timeline in plan.timelines {
        let sender = live::DeviceSender::connect(addr, origin)?;
        senders.push(std::thread::spawn(move || sender.replay(&timeline)));
    }

    let mut core = ServerCore::new(scenario, seed);
    let sample_period = scenario.sample_period();
    let mut next_sample = SimTime::ZERO;
    let mut events: Vec<EventRow> = Vec::new();
    let mut drop_mark = 0u64;
    // Packets the socket thread forwarded before it saw the drop flag, or
    // that were stamped inside a window that just closed, are discarded at
    // the consumer boundary and counted here.
    let mut consumer_drops = 0u64;
    let mut window_span: Option<(SimTime, SimTime)> = None;

    fn route(
        core: &mut ServerCore,
        consumer_drops: &mut u64,
        window_span: Option<(SimTime, SimTime)>,
        a: crate::transport::Arrival,
    ) {
        let in_closed_window =
            window_span.is_some_and(|(start, end)| a.time >= start && a.time < end);
        if a.dropped {
            core.record_window_drop(&a.packet, a.time);
        } else if core.mitigation.is_dropping() || in_closed_window {
            core.record_window_drop(&a.packet, a.time);
            *consumer_drops += 1;
        } else {
            core.on_arrival(a.packet, a.time);
        }
    }

    loop {
        let now = server.now();
        if now > horizon {
            break;
        }
        if let Some(deadline) = core.drop_deadline() {
            if now >= deadline {
                core.handle_deadline(now)?;
                server.set_drop(false);
                events.push(EventRow {
                    event_time_s: now.as_secs_f64(),
                    event: MitigationEventKind::Deadline,
                    flushed: 0,
                    dropped_since_last: server.dropped_count() + consumer_drops - drop_mark,
                });
                drop_mark = server.dropped_count() + consumer_drops;
            }
        }
        while next_sample <= now {
            core.sample(next_sample)?;
            next_sample += sample_period;
        }
        while let Some(a) = server.try_recv() {
            route(&mut core, &mut consumer_drops, window_span, a);
        }
        if core.state == ConsumerState::Idle && !core.buffer.is_empty() {
            core.try_start_service(server.now());
            if let Some(until) = core.next_consumer_event() {
                loop {
                    let n = server.now();
                    if n >= until {
                        break;
                    }
                    std::thread::sleep(std::time::Duration::from_micros(
                        (until - n).as_micros().min(2000),
                    ));
                }
                let outcome = core.on_consumer_event(server.now())?;
                if let Some(act) = outcome.activation {
                    server.set_drop(true);
                    let t = server.now();
                    window_span = Some((t, core.drop_deadline().unwrap_or(t)));
                    events.push(EventRow {
                        event_time_s: t.as_secs_f64(),
                        event: MitigationEventKind::Activate,
                        flushed: act.flushed,
                        dropped_since_last: server.dropped_count() + consumer_drops - drop_mark,
                    });
                    drop_mark = server.dropped_count() + consumer_drops;
                }
            }
        } else if let Some(a) = server.recv_timeout(std::time::Duration::from_millis(2)) {
            route(&mut core, &mut consumer_drops, window_span, a);
        }
    }

    let mut max_lateness = std::time::Duration::ZERO;
    for s in senders {
        let late = s
            .join()
            .map_err(|_| RunError::Transport("device sender thread panicked".into()))??;
        max_lateness = max_lateness.max(late);
    }

    // Consumer-boundary drops count against the drop window, not delivery.
    let delivered = server.delivered_count() - consumer_drops;
    let dropped = server.dropped_count() + consumer_drops;
    let malformed = server.skipped_malformed_count();
    let stats = RunStats {
        emitted: plan.emitted,
        transport_delivered: delivered,
        transport_dropped: dropped,
        skipped_malformed: malformed,
        undelivered: plan.emitted.saturating_sub(delivered + dropped + malformed),
        enqueued: core.buffer.enqueue_count(),
        dequeued: core.buffer.dequeue_count(),
        flushed: core.buffer.flush_count(),
        tail_dropped: core.buffer.tail_drop_count(),
        processed_normal: core.processed_normal,
        final_queue_len: core.buffer.len() as u64,
        peak_queue: core.buffer.peak_len() as u64,
        trained_at_s: core.trained_at.map(|t| t.as_secs_f64()),
        training_keys: core.training_keys.iter().map(|&(s, q)| [s, q]).collect(),
        activation_count: core.mitigation.activation_count(),
        attack_intervals_s: plan
            .resolved_intervals
            .iter()
            .map(|iv| [iv.start.as_secs_f64(), iv.end.as_secs_f64()])
            .collect(),
        effective_recv_buffer: server.effective_recv_buffer,
        sender_max_lateness_ms: Some(max_lateness.as_secs_f64() * 1e3),
    };

    Ok(RunArtifacts {
        manifest: Some(manifest_for(scenario, seed)),
        timeline: core
            .timeline
            .samples()
            .iter()
            .map(|s| crate::artifacts::TimelineRow {
                time_s: s.time.as_secs_f64(),
                queue_len: s.queue_len as u64,
                proc_rate_pps: s.proc_rate_pps,
                delay_ms: s.delay_ms,
                mitigation_active: s.mitigation_active,
            })
            .collect(),
        decisions: core.decisions,
        members: core.members,
        events,
        drops: core.drops,
        truth: truth_rows(&plan.truth),
        stats,
        model: core.model,
    })
}

/// Run, summarize, and (optionally) persist artifacts, report, and charts.
pub fn run_and_write(
    scenario: &Scenario,
    seed: u64,
    out_dir: Option<&Path>,
) -> Result<(RunArtifacts, RunReport), RunError> {
    let artifacts = run(scenario, seed)?;
    let report = metrics::summarize(&artifacts)?;
    if let Some(dir) = out_dir {
        crate::artifacts::write_run_dir(dir, &artifacts)?;
        metrics::write_report(dir, &report)?;
        chart::render_charts(&artifacts, dir)?;
    }
    Ok((artifacts, report))
}

/// Rerun the scenario once per threshold and tabulate the confusion
/// statistics. Requires sim mode (determinism).
pub fn sweep_gamma(
    scenario: &Scenario,
    seed: u64,
    grid: &[f64],
) -> Result<Vec<SweepRow>, RunError> {
    if scenario.transport.mode != TransportMode::Sim {
        return Err(RunError::config(
            "transport.mode",
            "gamma sweep requires sim mode",
        ));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for &gamma in grid {
        let mut s = scenario.clone();
        s.gamma = gamma;
        let artifacts = run_sim(&s, seed)?;
        let confusion = metrics::evaluate(&artifacts)?;
        rows.push(SweepRow {
            gamma,
            confusion: confusion.summary(),
        });
    }
    Ok(rows)
}

/// Default sweep grid: 0.0, 0.05, ..., 1.0.
pub fn default_gamma_grid() -> Vec<f64> {
    (0..=20).map(|k| k as f64 * 0.05).collect()
}

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("gamma,tp,fp,tn,fn,accuracy,tpr,tnr\n");
    let opt = |v: Option<f64>| v.map_or("nan".to_string(), |x| format!("{x:.6}"));
    for r in rows {
        let _ = writeln!(
            out,
            "{:.4},{},{},{},{},{},{},{}",
            r.gamma,
            r.confusion.tp,
            r.confusion.fp,
            r.confusion.tn,
            r.confusion.fn_,
            opt(r.confusion.accuracy),
            opt(r.confusion.tpr),
            opt(r.confusion.tnr),
        );
    }
    out
}
