//! Datagram delivery between generators and the server.
//!
//! Two interchangeable backends: a deterministic virtual-clock simulator
//! (a priority queue of delivery events) and a live loopback-socket mode.
//! Neither acknowledges nor retransmits; loss happens only through the
//! mitigation drop window or, in live mode, OS buffer overflow, and both
//! are counted.

use crate::error::RunError;
use crate::time::{SimDuration, SimTime};
use crate::traffic::PacketRecord;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClockMode {
    /// Virtual time advances only through event processing.
    Virtual,
    /// Monotonic wall-clock time relative to the run origin.
    Wall,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransportConfig {
    pub mode: ClockMode,
    /// Fixed one-way latency applied to every datagram in sim mode.
    pub latency: SimDuration,
    /// Optional uniform jitter bound added on top of the fixed latency.
    pub jitter: SimDuration,
    pub port: u16,
    /// Requested OS receive-buffer size in live mode; recorded in the
    /// manifest because it bounds queue growth upstream of the
    /// application buffer.
    pub recv_buffer_bytes: Option<usize>,
}

impl Default for TransportConfig {
    fn default() -> TransportConfig {
        TransportConfig {
            mode: ClockMode::Virtual,
            latency: SimDuration::from_micros(200),
            jitter: SimDuration::ZERO,
            port: 5555,
            recv_buffer_bytes: None,
        }
    }
}

/// A scheduled delivery. Events order by `(deliver_time, source, seq)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DatagramEvent {
    pub deliver_time: SimTime,
    pub packet: PacketRecord,
}

impl DatagramEvent {
    fn key(&self) -> (SimTime, u32, u32) {
        (self.deliver_time, self.packet.source, self.packet.seq)
    }
}

impl Eq for DatagramEvent {}

impl Ord for DatagramEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl PartialOrd for DatagramEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// One datagram handed to the server side, or discarded by the drop window.
#[derive(Debug, Clone)]
pub struct Arrival {
    pub time: SimTime,
    pub packet: PacketRecord,
    /// True when the drop window discarded this datagram before queueing.
    pub dropped: bool,
}

/// Deterministic in-memory backend: `send` schedules a delivery at
/// `emit_time + latency (+ jitter)`, `recv_next` pops deliveries in
/// `(deliver_time, source, seq)` order.
pub struct SimTransport {
    pending: BinaryHeap<std::cmp::Reverse<DatagramEvent>>,
    latency: SimDuration,
    jitter: SimDuration,
    jitter_rng: ChaCha8Rng,
    dropping: bool,
    sent: u64,
    delivered: u64,
    dropped: u64,
    last_deliver: SimTime,
}

impl SimTransport {
    pub fn new(latency: SimDuration, jitter: SimDuration, seed: u64) -> SimTransport {
        let mut jitter_rng = ChaCha8Rng::seed_from_u64(seed);
        jitter_rng.set_stream(0x7472616e73); // "trans"
        SimTransport {
            pending: BinaryHeap::new(),
            latency,
            jitter,
            jitter_rng,
            dropping: false,
            sent: 0,
            delivered: 0,
            dropped: 0,
            last_deliver: SimTime::ZERO,
        }
    }

    pub fn from_config(cfg: &TransportConfig, seed: u64) -> SimTransport {
        SimTransport::new(cfg.latency, cfg.jitter, seed)
    }

    pub fn send(&mut self, packet: PacketRecord) {
        let mut deliver = packet.emit_time + self.latency;
        if !self.jitter.is_zero() {
            deliver +=
                SimDuration::from_micros(self.jitter_rng.gen_range(0..=self.jitter.as_micros()));
        }
        self.sent += 1;
        self.pending.push(std::cmp::Reverse(DatagramEvent {
            deliver_time: deliver,
            packet,
        }));
    }

    /// Deliver time of the next pending datagram, if any.
    pub fn next_deliver_time(&self) -> Option<SimTime> {
        self.pending.peek().map(|e| e.0.deliver_time)
    }

    /// Pop the next delivery. While the drop window is active the datagram
    /// is discarded (flagged and counted) instead of being handed over.
    pub fn recv_next(&mut self) -> Option<Arrival> {
        let event = self.pending.pop()?.0;
        debug_assert!(
            event.deliver_time >= self.last_deliver,
            "clock ran backward"
        );
        self.last_deliver = event.deliver_time;
        let dropped = self.dropping;
        if dropped {
            self.dropped += 1;
        } else {
            self.delivered += 1;
        }
        Some(Arrival {
            time: event.deliver_time,
            packet: event.packet,
            dropped,
        })
    }

    pub fn set_drop(&mut self, enabled: bool) {
        self.dropping = enabled;
    }

    pub fn dropping(&self) -> bool {
        self.dropping
    }

    pub fn sent_count(&self) -> u64 {
        self.sent
    }

    pub fn delivered_count(&self) -> u64 {
        self.delivered
    }

    pub fn dropped_count(&self) -> u64 {
        self.dropped
    }
}

pub mod live {
    //! Loopback-socket backend: one sender socket per generator fanning in
    //! to a single server socket, mirroring the hub topology. The receive
    //! thread hands packets to the consumer through an mpsc channel and
    //! discards (but still reports) datagrams while the drop flag is set,
    //! so the application buffer never sees them.

    use super::*;
    use crate::wire;
    use std::net::{SocketAddr, UdpSocket};
    use std::sync::atomic::{AtomicBool, AtomicU64, Ordering as AtomicOrdering};
    use std::sync::mpsc;
    use std::sync::Arc;
    use std::time::{Duration, Instant};

    #[cfg(unix)]
    fn set_recv_buffer(socket: &UdpSocket, bytes: usize) -> std::io::Result<usize> {
        use std::os::fd::AsRawFd;
        let fd = socket.as_raw_fd();
        let val = bytes as libc::c_int;
        let rc = unsafe {
            libc::setsockopt(
                fd,
                libc::SOL_SOCKET,
                libc::SO_RCVBUF,
                &val as *const _ as *const libc::c_void,
                std::mem::size_of::<libc::c_int>() as libc::socklen_t,
            )
        };
        if rc != 0 {
            return Err(std::io::Error::last_os_error());
        }
        let mut out: libc::c_int = 0;
        let mut len = std::mem::size_of::<libc::c_int>() as libc::socklen_t;
        let rc = unsafe {
            libc::getsockopt(
                fd,
                libc::SOL_SOCKET,
                libc::SO_RCVBUF,
                &mut out as *mut _ as *mut libc::c_void,
                &mut len,
            )
        };
        if rc != 0 {
            return Err(std::io::Error::last_os_error());
        }
        Ok(out as usize)
    }

    #[cfg(not(unix))]
    fn set_recv_buffer(_socket: &UdpSocket, _bytes: usize) -> std::io::Result<usize> {
        Err(std::io::Error::new(
            std::io::ErrorKind::Unsupported,
            "SO_RCVBUF tuning unsupported on this platform",
        ))
    }

    /// Server-side socket plus its receive thread.
    pub struct LiveServer {
        rx: mpsc::Receiver<Arrival>,
        drop_flag: Arc<AtomicBool>,
        dropped: Arc<AtomicU64>,
        delivered: Arc<AtomicU64>,
        skipped_malformed: Arc<AtomicU64>,
        stop: Arc<AtomicBool>,
        handle: Option<std::thread::JoinHandle<()>>,
        local: SocketAddr,
        /// Effective SO_RCVBUF reported by the kernel, when tuned.
        pub effective_recv_buffer: Option<usize>,
        origin: Instant,
    }

    impl LiveServer {
        pub fn bind(
            port: u16,
            recv_buffer_bytes: Option<usize>,
            origin: Instant,
        ) -> Result<LiveServer, RunError> {
            let socket = UdpSocket::bind(("127.0.0.1", port))
                .map_err(|e| RunError::Transport(format!("bind port {port}: {e}")))?;
            let effective_recv_buffer = match recv_buffer_bytes {
                Some(bytes) => Some(
                    set_recv_buffer(&socket, bytes)
                        .map_err(|e| RunError::Transport(format!("SO_RCVBUF: {e}")))?,
                ),
                None => None,
            };
            socket
                .set_read_timeout(Some(Duration::from_millis(20)))
                .map_err(|e| RunError::Transport(e.to_string()))?;
            let local = socket
                .local_addr()
                .map_err(|e| RunError::Transport(e.to_string()))?;

            let (tx, rx) = mpsc::channel();
            let drop_flag = Arc::new(AtomicBool::new(false));
            let dropped = Arc::new(AtomicU64::new(0));
            let delivered = Arc::new(AtomicU64::new(0));
            let skipped_malformed = Arc::new(AtomicU64::new(0));
            let stop = Arc::new(AtomicBool::new(false));

            let t_drop = drop_flag.clone();
            let t_dropped = dropped.clone();
            let t_delivered = delivered.clone();
            let t_skipped = skipped_malformed.clone();
            let t_stop = stop.clone();
            let handle = std::thread::spawn(move || {
                let mut buf = [0u8; 2048];
                while !t_stop.load(AtomicOrdering::Relaxed) {
                    match socket.recv(&mut buf) {
                        Ok(n) => {
                            let arrival = SimTime::from_micros(origin.elapsed().as_micros() as u64);
                            match wire::decode(&buf[..n]) {
                                Ok(packet) => {
                                    let dropping = t_drop.load(AtomicOrdering::Relaxed);
                                    if dropping {
                                        t_dropped.fetch_add(1, AtomicOrdering::Relaxed);
                                    } else {
                                        t_delivered.fetch_add(1, AtomicOrdering::Relaxed);
                                    }
                                    // Dropped arrivals are still reported (flagged)
                                    // so collateral accounting can see them.
                                    if tx
                                        .send(Arrival {
                                            time: arrival,
                                            packet,
                                            dropped: dropping,
                                        })
                                        .is_err()
                                    {
                                        break;
                                    }
                                }
                                Err(_) => {
                                    t_skipped.fetch_add(1, AtomicOrdering::Relaxed);
                                }
                            }
                        }
                        Err(e)
                            if e.kind() == std::io::ErrorKind::WouldBlock
                                || e.kind() == std::io::ErrorKind::TimedOut =>
                        {
                            continue;
                        }
                        Err(_) => break,
                    }
                }
            });

            Ok(LiveServer {
                rx,
                drop_flag,
                dropped,
                delivered,
                skipped_malformed,
                stop,
                handle: Some(handle),
                local,
                effective_recv_buffer,
                origin,
            })
        }

        pub fn local_addr(&self) -> SocketAddr {
            self.local
        }

        pub fn now(&self) -> SimTime {
            SimTime::from_micros(self.origin.elapsed().as_micros() as u64)
        }

        pub fn recv_timeout(&self, timeout: Duration) -> Option<Arrival> {
            self.rx.recv_timeout(timeout).ok()
        }

        pub fn try_recv(&self) -> Option<Arrival> {
            self.rx.try_recv().ok()
        }

        pub fn set_drop(&self, enabled: bool) {
            self.drop_flag.store(enabled, AtomicOrdering::Relaxed);
        }

        pub fn dropped_count(&self) -> u64 {
            self.dropped.load(AtomicOrdering::Relaxed)
        }

        pub fn delivered_count(&self) -> u64 {
            self.delivered.load(AtomicOrdering::Relaxed)
        }

        pub fn skipped_malformed_count(&self) -> u64 {
            self.skipped_malformed.load(AtomicOrdering::Relaxed)
        }
    }

    impl Drop for LiveServer {
        fn drop(&mut self) {
            self.stop.store(true, AtomicOrdering::Relaxed);
            if let Some(h) = self.handle.take() {
                let _ = h.join();
            }
        }
    }

    /// Client-side socket that replays a precomputed emission timeline
    /// against the wall clock. Late packets are sent immediately (catch-up
    /// against absolute targets), so the average rate holds; the worst
    /// observed lateness bounds how far inter-emission gaps compressed.
    pub struct DeviceSender {
        socket: UdpSocket,
        origin: Instant,
    }

    impl DeviceSender {
        pub fn connect(server: SocketAddr, origin: Instant) -> Result<DeviceSender, RunError> {
            let socket = UdpSocket::bind(("127.0.0.1", 0))
                .map_err(|e| RunError::Transport(e.to_string()))?;
            socket
                .connect(server)
                .map_err(|e| RunError::Transport(e.to_string()))?;
            Ok(DeviceSender { socket, origin })
        }

        /// Returns the maximum scheduling lateness over the replay.
        pub fn replay(&self, timeline: &[PacketRecord]) -> Result<Duration, RunError> {
            let mut max_late = Duration::ZERO;
            for packet in timeline {
                let target = Duration::from_micros(packet.emit_time.as_micros());
                loop {
                    let elapsed = self.origin.elapsed();
                    if elapsed >= target {
                        max_late = max_late.max(elapsed - target);
                        break;
                    }
                    std::thread::sleep((target - elapsed).min(Duration::from_millis(5)));
                }
                self.socket
                    .send(&wire::encode(packet))
                    .map_err(|e| RunError::Transport(format!("send: {e}")))?;
            }
            Ok(max_late)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traffic::{DeviceGenerator, DeviceProfile, PacketKind};

    fn packet(source: u32, seq: u32, emit_us: u64) -> PacketRecord {
        PacketRecord {
            source,
            seq,
            emit_time: SimTime::from_micros(emit_us),
            kind: PacketKind::Flood,
            payload: vec![0; 4],
        }
    }

    #[test]
    fn zero_latency_delivers_at_emit_time() {
        let mut t = SimTransport::new(SimDuration::ZERO, SimDuration::ZERO, 0);
        t.send(packet(1, 0, 1_000_000));
        let a = t.recv_next().unwrap();
        assert_eq!(a.time, SimTime::from_micros(1_000_000));
        assert!(!a.dropped);
    }

    #[test]
    fn latency_is_additive() {
        let mut t = SimTransport::new(SimDuration::from_micros(200), SimDuration::ZERO, 0);
        t.send(packet(1, 0, 1_000_000));
        assert_eq!(t.recv_next().unwrap().time, SimTime::from_micros(1_000_200));
    }

    #[test]
    fn delivery_order_matches_sort_oracle() {
        // Oracle: deliveries must come out sorted by (deliver_time, source, seq),
        // independent of send order.
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let mut packets = Vec::new();
        for source in 0..4u32 {
            for seq in 0..2500u32 {
                // Colliding emit times across sources exercise the tiebreak.
                packets.push(packet(source, seq, u64::from(seq % 100) * 1000));
            }
        }
        packets.shuffle(&mut rng);

        let mut expected: Vec<(SimTime, u32, u32)> = packets
            .iter()
            .map(|p| (p.emit_time + SimDuration::from_micros(200), p.source, p.seq))
            .collect();
        expected.sort();

        let mut t = SimTransport::new(SimDuration::from_micros(200), SimDuration::ZERO, 0);
        for p in packets {
            t.send(p);
        }
        let mut got = Vec::new();
        while let Some(a) = t.recv_next() {
            got.push((a.time, a.packet.source, a.packet.seq));
        }
        assert_eq!(got.len(), 10_000);
        assert_eq!(got, expected);
    }

    #[test]
    fn drop_policy_counts_and_discards() {
        let mut t = SimTransport::new(SimDuration::ZERO, SimDuration::ZERO, 0);
        for seq in 0..10 {
            t.send(packet(1, seq, u64::from(seq)));
        }
        t.set_drop(true);
        for _ in 0..4 {
            assert!(t.recv_next().unwrap().dropped);
        }
        t.set_drop(false);
        for _ in 0..6 {
            assert!(!t.recv_next().unwrap().dropped);
        }
        assert_eq!(t.dropped_count(), 4);
        assert_eq!(t.delivered_count(), 6);
        // Conservation: nothing duplicated, nothing lost silently.
        assert_eq!(t.sent_count(), t.delivered_count() + t.dropped_count());
    }

    #[test]
    fn deterministic_with_jitter() {
        let build = || {
            let mut t = SimTransport::new(
                SimDuration::from_micros(200),
                SimDuration::from_micros(100),
                5,
            );
            for seq in 0..100 {
                t.send(packet(1, seq, u64::from(seq) * 10));
            }
            let mut times = Vec::new();
            while let Some(a) = t.recv_next() {
                times.push(a.time);
            }
            times
        };
        assert_eq!(build(), build());
    }

    #[test]
    fn live_truncated_datagram_counted_and_skipped() {
        let origin = std::time::Instant::now();
        let server = live::LiveServer::bind(0, None, origin).unwrap();
        let raw = std::net::UdpSocket::bind("127.0.0.1:0").unwrap();
        raw.send_to(&[0x46, 0x42, 1], server.local_addr()).unwrap(); // short of a header
        raw.send_to(&[0u8; 24], server.local_addr()).unwrap(); // bad magic
        let mut g = DeviceGenerator::new(DeviceProfile::benign(1), 1);
        raw.send_to(
            &crate::wire::encode(&g.benign_next(SimTime::ZERO)),
            server.local_addr(),
        )
        .unwrap();
        let good = server
            .recv_timeout(std::time::Duration::from_secs(2))
            .expect("valid packet lost");
        assert_eq!(good.packet.source, 1);
        assert_eq!(server.skipped_malformed_count(), 2);
        assert_eq!(server.delivered_count(), 1);
    }

    #[test]
    fn live_loopback_round_trip() {
        let origin = std::time::Instant::now();
        let server = live::LiveServer::bind(0, Some(1 << 20), origin).unwrap();
        let sender = live::DeviceSender::connect(server.local_addr(), origin).unwrap();
        let mut g = DeviceGenerator::new(DeviceProfile::benign(1), 1);
        let timeline: Vec<_> = (0..50)
            .map(|k| g.benign_next(SimTime::from_micros(k)))
            .collect();
        sender.replay(&timeline).unwrap();

        let mut got = 0;
        while got < 50 {
            match server.recv_timeout(std::time::Duration::from_secs(2)) {
                Some(a) => {
                    assert_eq!(a.packet.kind, PacketKind::Telemetry);
                    got += 1;
                }
                None => panic!("timed out after {got} packets"),
            }
        }
        assert_eq!(server.delivered_count(), 50);
        assert_eq!(server.dropped_count(), 0);
    }
}
