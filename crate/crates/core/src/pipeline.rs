//! Server-side input buffer, batch service accounting, and queue
//! instrumentation.
//!
//! Arrivals append to a FIFO in front of the detector; the consumer
//! dequeues batches, records per-packet queueing delay at dequeue, and a
//! sampler takes queue-length / processing-rate readings on a fixed
//! period. A conservation identity (enqueued = dequeued + flushed +
//! dropped + still queued) is checked at every sample.

use crate::time::{SimDuration, SimTime};
use crate::traffic::PacketRecord;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DegradationConfig {
    /// Queue length beyond which service degrades.
    pub queue_threshold: usize,
    /// Multiplier applied to the per-packet service time while degraded.
    pub factor: f64,
}

impl Default for DegradationConfig {
    fn default() -> DegradationConfig {
        DegradationConfig {
            queue_threshold: 5000,
            factor: 2.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ServiceConfig {
    /// Detector service time per packet.
    pub ids_service_time: SimDuration,
    pub batch_size: usize,
    /// Extra time per packet ruled normal, spent in the content processor.
    pub content_processing_time: SimDuration,
    /// None means unbounded (arrivals are never tail-dropped).
    pub buffer_capacity: Option<usize>,
    /// Optional overload hook: service slows once the queue passes the
    /// threshold, reproducing intermittent paralysis. Off by default.
    pub degradation: Option<DegradationConfig>,
}

impl Default for ServiceConfig {
    fn default() -> ServiceConfig {
        ServiceConfig {
            ids_service_time: SimDuration::from_millis_f64(1.0),
            batch_size: 10,
            content_processing_time: SimDuration::ZERO,
            buffer_capacity: None,
            degradation: None,
        }
    }
}

impl ServiceConfig {
    /// Wall duration one dequeue occupies the consumer. A dequeue always
    /// consumes a full batch worth of service capacity.
    pub fn batch_cost(&self, queue_len_at_start: usize) -> SimDuration {
        let base =
            SimDuration::from_micros(self.ids_service_time.as_micros() * self.batch_size as u64);
        match self.degradation {
            Some(d) if queue_len_at_start > d.queue_threshold => base.mul_f64(d.factor),
            _ => base,
        }
    }

    /// Hard ceiling on sustained processing rate, packets per second.
    pub fn max_rate_pps(&self) -> f64 {
        1.0 / self.ids_service_time.as_secs_f64()
    }
}

/// A packet waiting for (or taken into) service, stamped with its arrival.
#[derive(Debug, Clone)]
pub struct QueuedPacket {
    pub packet: PacketRecord,
    pub arrival: SimTime,
}

/// Why a packet left the system without being classified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DropCause {
    /// Buffer flushed on mitigation activation.
    Flush,
    /// Discarded at the transport boundary during a drop window.
    Window,
    /// Tail-dropped on a bounded buffer.
    Tail,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DropRecord {
    pub time: SimTime,
    pub source: u32,
    pub seq: u32,
    pub cause: DropCause,
}

/// FIFO in front of the detector with exact conservation counters.
#[derive(Debug, Default)]
pub struct InputBuffer {
    fifo: VecDeque<QueuedPacket>,
    capacity: Option<usize>,
    enqueue_count: u64,
    dequeue_count: u64,
    flush_count: u64,
    tail_drop_count: u64,
    peak_len: usize,
}

impl InputBuffer {
    pub fn new(capacity: Option<usize>) -> InputBuffer {
        InputBuffer {
            capacity,
            ..InputBuffer::default()
        }
    }

    /// Append one arrival. Returns false when a bounded buffer tail-drops it.
    pub fn enqueue(&mut self, packet: PacketRecord, now: SimTime) -> bool {
        if let Some(cap) = self.capacity {
            if self.fifo.len() >= cap {
                self.tail_drop_count += 1;
                return false;
            }
        }
        self.fifo.push_back(QueuedPacket {
            packet,
            arrival: now,
        });
        self.enqueue_count += 1;
        self.peak_len = self.peak_len.max(self.fifo.len());
        true
    }

    /// Remove up to `batch_size` packets in FIFO order.
    pub fn dequeue_batch(&mut self, batch_size: usize) -> Vec<QueuedPacket> {
        let n = batch_size.min(self.fifo.len());
        let batch: Vec<QueuedPacket> = self.fifo.drain(..n).collect();
        self.dequeue_count += batch.len() as u64;
        batch
    }

    /// Drop everything queued; returns the flushed packets for logging.
    pub fn flush(&mut self) -> Vec<QueuedPacket> {
        let flushed: Vec<QueuedPacket> = self.fifo.drain(..).collect();
        self.flush_count += flushed.len() as u64;
        flushed
    }

    pub fn len(&self) -> usize {
        self.fifo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fifo.is_empty()
    }

    pub fn peak_len(&self) -> usize {
        self.peak_len
    }

    pub fn enqueue_count(&self) -> u64 {
        self.enqueue_count
    }

    pub fn dequeue_count(&self) -> u64 {
        self.dequeue_count
    }

    pub fn flush_count(&self) -> u64 {
        self.flush_count
    }

    pub fn tail_drop_count(&self) -> u64 {
        self.tail_drop_count
    }

    /// enqueued = dequeued + flushed + tail-dropped + still queued.
    pub fn conservation_holds(&self) -> bool {
        self.enqueue_count == self.dequeue_count + self.flush_count + self.fifo.len() as u64
    }
}

/// One instrumentation reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueueSample {
    pub time: SimTime,
    pub queue_len: usize,
    /// Packets dequeued in the trailing second.
    pub proc_rate_pps: f64,
    /// Mean queueing delay of packets dequeued in the trailing second.
    pub delay_ms: f64,
    pub mitigation_active: bool,
}

/// Append-only sample log plus the trailing-window trackers that feed it.
#[derive(Debug, Default)]
pub struct TimelineLog {
    samples: Vec<QueueSample>,
    dequeue_times: VecDeque<SimTime>,
    recent_delays: VecDeque<(SimTime, SimDuration)>,
}

const RATE_WINDOW: SimDuration = SimDuration(crate::time::MICROS_PER_SEC);

impl TimelineLog {
    pub fn new() -> TimelineLog {
        TimelineLog::default()
    }

    /// Record one dequeued packet's service pickup.
    pub fn on_dequeue(&mut self, now: SimTime, delay: SimDuration) {
        self.dequeue_times.push_back(now);
        self.recent_delays.push_back((now, delay));
    }

    fn prune(&mut self, now: SimTime) {
        let cutoff = SimTime::from_micros(now.as_micros().saturating_sub(RATE_WINDOW.as_micros()));
        while self.dequeue_times.front().is_some_and(|&t| t <= cutoff) {
            self.dequeue_times.pop_front();
        }
        while self
            .recent_delays
            .front()
            .is_some_and(|&(t, _)| t <= cutoff)
        {
            self.recent_delays.pop_front();
        }
    }

    /// Take one reading at `now` and append it.
    pub fn sample(
        &mut self,
        now: SimTime,
        queue_len: usize,
        mitigation_active: bool,
    ) -> QueueSample {
        self.prune(now);
        let rate = self.dequeue_times.len() as f64 / RATE_WINDOW.as_secs_f64();
        let delay_ms = if self.recent_delays.is_empty() {
            0.0
        } else {
            self.recent_delays
                .iter()
                .map(|(_, d)| d.as_millis_f64())
                .sum::<f64>()
                / self.recent_delays.len() as f64
        };
        if let Some(last) = self.samples.last() {
            debug_assert!(now > last.time, "samples must be strictly increasing");
        }
        let s = QueueSample {
            time: now,
            queue_len,
            proc_rate_pps: rate,
            delay_ms,
            mitigation_active,
        };
        self.samples.push(s);
        s
    }

    pub fn samples(&self) -> &[QueueSample] {
        &self.samples
    }

    pub fn from_samples(samples: Vec<QueueSample>) -> TimelineLog {
        TimelineLog {
            samples,
            ..TimelineLog::default()
        }
    }
}
