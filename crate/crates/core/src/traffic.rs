//! Benign telemetry and flood-attack traffic generation.
//!
//! Each device is an independent producer with its own seeded generator
//! state: a telemetry tick every `telemetry_period`, and (for a compromised
//! device) flood bursts at `attack_rate` over sampled or scheduled attack
//! intervals. Every emitted packet is recorded in a ground-truth log keyed
//! by `(source, seq)`; the truth kind never travels on the classification
//! path.

use crate::error::RunError;
use crate::time::{SimDuration, SimTime, MICROS_PER_SEC};
use crate::wire::HEADER_LEN;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PacketKind {
    Telemetry,
    Flood,
}

/// One datagram as produced by a device. `payload` is the body that follows
/// the 20-byte wire header; `wire_len` is the full datagram size.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketRecord {
    pub source: u32,
    pub seq: u32,
    pub emit_time: SimTime,
    pub kind: PacketKind,
    pub payload: Vec<u8>,
}

impl PacketRecord {
    /// Full on-wire datagram length (header + body).
    pub fn wire_len(&self) -> usize {
        HEADER_LEN + self.payload.len()
    }

    /// Telemetry reading carried in the body, if this is a telemetry packet.
    pub fn temperature(&self) -> Option<f32> {
        match self.kind {
            PacketKind::Telemetry => self
                .payload
                .get(0..4)
                .map(|b| f32::from_le_bytes(b.try_into().unwrap())),
            PacketKind::Flood => None,
        }
    }
}

/// Static description of one traffic source.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub device_id: u32,
    pub telemetry_period: SimDuration,
    pub compromised: bool,
    /// Per-telemetry-tick probability that a new attack interval starts.
    pub attack_probability: f64,
    pub attack_duration: SimDuration,
    /// Flood emission rate in packets per second.
    pub attack_rate: f64,
    /// Full datagram size of a flood packet, header included.
    pub attack_payload_size: usize,
    /// Ticks before this offset never initiate an attack, so the detector's
    /// training prefix stays benign.
    pub attack_start_after: SimTime,
}

impl DeviceProfile {
    pub fn benign(device_id: u32) -> DeviceProfile {
        DeviceProfile {
            device_id,
            telemetry_period: SimDuration::from_secs(1),
            compromised: false,
            attack_probability: 0.10,
            attack_duration: SimDuration::from_secs(10),
            attack_rate: 1000.0,
            attack_payload_size: 1032,
            attack_start_after: SimTime::ZERO,
        }
    }

    pub fn compromised(device_id: u32) -> DeviceProfile {
        DeviceProfile {
            compromised: true,
            ..DeviceProfile::benign(device_id)
        }
    }

    pub fn validate(&self) -> Result<(), RunError> {
        if !(0.0..=1.0).contains(&self.attack_probability) {
            return Err(RunError::config(
                format!("devices[{}].attack_probability", self.device_id),
                "must be in [0, 1]",
            ));
        }
        if self.telemetry_period.is_zero() {
            return Err(RunError::config(
                format!("devices[{}].telemetry_period", self.device_id),
                "must be positive",
            ));
        }
        if self.compromised && self.attack_rate <= 0.0 {
            return Err(RunError::config(
                format!("devices[{}].attack_rate", self.device_id),
                "must be positive for a compromised device",
            ));
        }
        if self.attack_payload_size < HEADER_LEN {
            return Err(RunError::config(
                format!("devices[{}].attack_payload_size", self.device_id),
                format!("must be at least the {HEADER_LEN}-byte header"),
            ));
        }
        Ok(())
    }
}

/// Half-open attack interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackInterval {
    pub start: SimTime,
    pub end: SimTime,
}

impl AttackInterval {
    pub fn new(start: SimTime, duration: SimDuration) -> AttackInterval {
        AttackInterval {
            start,
            end: start + duration,
        }
    }

    pub fn contains(&self, t: SimTime) -> bool {
        t >= self.start && t < self.end
    }
}

/// Sample attack initiation ticks: at each telemetry tick, a new attack
/// starts with `attack_probability`. Ticks before `attack_start_after` are
/// skipped.
pub fn sample_attack_starts(
    profile: &DeviceProfile,
    phase: SimDuration,
    horizon: SimDuration,
    rng: &mut impl Rng,
) -> Vec<SimTime> {
    debug_assert!(profile.compromised);
    let mut starts = Vec::new();
    let mut t = SimTime::ZERO + phase;
    while t.as_micros() < horizon.as_micros() {
        if t >= profile.attack_start_after && rng.gen::<f64>() < profile.attack_probability {
            starts.push(t);
        }
        t += profile.telemetry_period;
    }
    starts
}

/// Merge initiation ticks into disjoint intervals; overlapping or touching
/// intervals collapse into one (a device cannot interleave two floods).
pub fn merge_attack_intervals(starts: &[SimTime], duration: SimDuration) -> Vec<AttackInterval> {
    let mut merged: Vec<AttackInterval> = Vec::new();
    for &s in starts {
        let iv = AttackInterval::new(s, duration);
        match merged.last_mut() {
            Some(last) if iv.start <= last.end => {
                if iv.end > last.end {
                    last.end = iv.end;
                }
            }
            _ => merged.push(iv),
        }
    }
    merged
}

/// Probabilistic attack plan for one device over a horizon: sampled
/// initiations merged into disjoint intervals.
pub fn attack_schedule(
    profile: &DeviceProfile,
    phase: SimDuration,
    horizon: SimDuration,
    rng: &mut impl Rng,
) -> Vec<AttackInterval> {
    let starts = sample_attack_starts(profile, phase, horizon, rng);
    merge_attack_intervals(&starts, profile.attack_duration)
}

/// Emission offsets of a flood burst relative to its start: one packet every
/// `1/attack_rate` seconds while the offset is inside `duration`.
fn flood_offsets(rate: f64, duration: SimDuration) -> Vec<SimDuration> {
    debug_assert!(rate > 0.0);
    let mut offsets = Vec::new();
    let mut k: u64 = 0;
    loop {
        let off = (k as f64 * MICROS_PER_SEC as f64 / rate).round() as u64;
        if off >= duration.as_micros() {
            break;
        }
        offsets.push(SimDuration::from_micros(off));
        k += 1;
    }
    offsets
}

/// Ground-truth label stream, one entry per emitted packet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthEntry {
    pub source: u32,
    pub seq: u32,
    pub kind: PacketKind,
    pub emit_time: SimTime,
}

#[derive(Debug, Default, Clone)]
pub struct GroundTruthLog {
    entries: Vec<GroundTruthEntry>,
    index: HashMap<(u32, u32), usize>,
}

impl GroundTruthLog {
    pub fn new() -> GroundTruthLog {
        GroundTruthLog::default()
    }

    pub fn record(&mut self, packet: &PacketRecord) -> Result<(), RunError> {
        let key = (packet.source, packet.seq);
        if self.index.contains_key(&key) {
            return Err(RunError::Contract(format!(
                "duplicate ground-truth key ({}, {})",
                key.0, key.1
            )));
        }
        self.index.insert(key, self.entries.len());
        self.entries.push(GroundTruthEntry {
            source: packet.source,
            seq: packet.seq,
            kind: packet.kind,
            emit_time: packet.emit_time,
        });
        Ok(())
    }

    pub fn push_entry(&mut self, entry: GroundTruthEntry) -> Result<(), RunError> {
        let key = (entry.source, entry.seq);
        if self.index.contains_key(&key) {
            return Err(RunError::Contract(format!(
                "duplicate ground-truth key ({}, {})",
                key.0, key.1
            )));
        }
        self.index.insert(key, self.entries.len());
        self.entries.push(entry);
        Ok(())
    }

    pub fn lookup(&self, source: u32, seq: u32) -> Option<&GroundTruthEntry> {
        self.index.get(&(source, seq)).map(|&i| &self.entries[i])
    }

    pub fn entries(&self) -> &[GroundTruthEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

// Sub-stream ids for the per-device generator, so telemetry payloads,
// attack scheduling, and flood padding draw from independent streams.
const STREAM_TEMP: u64 = 1;
const STREAM_SCHEDULE: u64 = 2;
const STREAM_PAYLOAD: u64 = 3;
const STREAM_PHASE: u64 = 4;

/// Stateful per-device producer. Owns its seq counter, temperature walk and
/// rng streams; independent devices never share state.
pub struct DeviceGenerator {
    pub profile: DeviceProfile,
    /// Offset of the first telemetry tick within one period.
    pub phase: SimDuration,
    seq: u32,
    temperature_c: f64,
    temp_rng: ChaCha8Rng,
    schedule_rng: ChaCha8Rng,
    payload_rng: ChaCha8Rng,
}

impl DeviceGenerator {
    pub fn new(profile: DeviceProfile, seed: u64) -> DeviceGenerator {
        let device_seed = seed ^ (u64::from(profile.device_id) << 32);
        let stream = |s: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(device_seed);
            rng.set_stream(s);
            rng
        };
        let mut phase_rng = stream(STREAM_PHASE);
        let phase =
            SimDuration::from_micros(phase_rng.gen_range(0..profile.telemetry_period.as_micros()));
        let mut temp_rng = stream(STREAM_TEMP);
        let temperature_c = temp_rng.gen_range(40.0..50.0);
        DeviceGenerator {
            profile,
            phase,
            seq: 0,
            temperature_c,
            temp_rng,
            schedule_rng: stream(STREAM_SCHEDULE),
            payload_rng: stream(STREAM_PAYLOAD),
        }
    }

    /// Next telemetry packet at `clock`: a bounded random walk over a
    /// plausible CPU temperature range, encoded as an f32 body.
    pub fn benign_next(&mut self, clock: SimTime) -> PacketRecord {
        let step: f64 = self.temp_rng.gen_range(-0.5..0.5);
        self.temperature_c = (self.temperature_c + step).clamp(30.0, 80.0);
        let packet = PacketRecord {
            source: self.profile.device_id,
            seq: self.seq,
            emit_time: clock,
            kind: PacketKind::Telemetry,
            payload: (self.temperature_c as f32).to_le_bytes().to_vec(),
        };
        self.seq += 1;
        packet
    }

    /// Flood packets at `attack_rate` for `attack_duration`, starting at
    /// `start`, each padded with pseudorandom bytes to the configured
    /// datagram size.
    pub fn flood_burst(&mut self, start: SimTime) -> Vec<PacketRecord> {
        self.flood_over(AttackInterval::new(start, self.profile.attack_duration))
    }

    fn flood_over(&mut self, interval: AttackInterval) -> Vec<PacketRecord> {
        let duration = interval.end - interval.start;
        let body_len = self.profile.attack_payload_size - HEADER_LEN;
        flood_offsets(self.profile.attack_rate, duration)
            .into_iter()
            .map(|off| {
                let mut body = vec![0u8; body_len];
                self.payload_rng.fill(&mut body[..]);
                let packet = PacketRecord {
                    source: self.profile.device_id,
                    seq: self.seq,
                    emit_time: interval.start + off,
                    kind: PacketKind::Flood,
                    payload: body,
                };
                self.seq += 1;
                packet
            })
            .collect()
    }

    /// Sample this device's attack intervals over `horizon` from its own
    /// schedule stream.
    pub fn sample_schedule(&mut self, horizon: SimDuration) -> Vec<AttackInterval> {
        if !self.profile.compromised {
            return Vec::new();
        }
        attack_schedule(&self.profile, self.phase, horizon, &mut self.schedule_rng)
    }

    /// Full emission timeline over `[0, horizon)`: telemetry at every tick,
    /// plus flood bursts over `intervals`. Telemetry continues during an
    /// attack. Packets are returned in emission order with strictly
    /// increasing seq; telemetry sorts before flood at an equal timestamp.
    pub fn timeline(
        &mut self,
        horizon: SimDuration,
        intervals: &[AttackInterval],
    ) -> Vec<PacketRecord> {
        #[derive(PartialEq, Eq, PartialOrd, Ord)]
        enum Slot {
            Tick,
            Flood,
        }
        let mut events: Vec<(SimTime, Slot)> = Vec::new();
        let mut t = SimTime::ZERO + self.phase;
        while t.as_micros() < horizon.as_micros() {
            events.push((t, Slot::Tick));
            t += self.profile.telemetry_period;
        }
        for iv in intervals {
            let dur = iv.end - iv.start;
            for off in flood_offsets(self.profile.attack_rate, dur) {
                let at = iv.start + off;
                if at.as_micros() < horizon.as_micros() {
                    events.push((at, Slot::Flood));
                }
            }
        }
        events.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));

        let body_len = self.profile.attack_payload_size - HEADER_LEN;
        events
            .into_iter()
            .map(|(at, slot)| match slot {
                Slot::Tick => self.benign_next(at),
                Slot::Flood => {
                    let mut body = vec![0u8; body_len];
                    self.payload_rng.fill(&mut body[..]);
                    let packet = PacketRecord {
                        source: self.profile.device_id,
                        seq: self.seq,
                        emit_time: at,
                        kind: PacketKind::Flood,
                        payload: body,
                    };
                    self.seq += 1;
                    packet
                }
            })
            .collect()
    }
}
