//! Datagram wire format.
//!
//! Every datagram starts with a fixed 20-byte little-endian header:
//!
//! ```text
//! magic 0x46 0x42 | version u8 | kind u8 | device_id u32 | seq u32 | emit_time_micros u64
//! ```
//!
//! The body is a little-endian `f32` temperature for telemetry packets, or
//! pseudorandom padding for flood packets. The `kind` byte exists for
//! offline debugging only; the server pipeline never reads it (see the
//! kind-flip test in the runner module).

use crate::time::SimTime;
use crate::traffic::{PacketKind, PacketRecord};
use thiserror::Error;

pub const MAGIC: [u8; 2] = [0x46, 0x42];
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 20;
/// Telemetry body is a single f32 reading.
pub const TELEMETRY_BODY_LEN: usize = 4;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WireError {
    #[error("datagram truncated: {0} bytes, header needs {HEADER_LEN}")]
    Truncated(usize),
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported version {0}")]
    BadVersion(u8),
    #[error("unknown kind byte {0}")]
    BadKind(u8),
    #[error("telemetry body must be {TELEMETRY_BODY_LEN} bytes, got {0}")]
    BadTelemetryBody(usize),
}

/// Serialize a packet to its on-wire bytes. The result's length equals
/// `record.wire_len()`.
pub fn encode(record: &PacketRecord) -> Vec<u8> {
    let mut buf = Vec::with_capacity(HEADER_LEN + record.payload.len());
    buf.extend_from_slice(&MAGIC);
    buf.push(VERSION);
    buf.push(match record.kind {
        PacketKind::Telemetry => 0,
        PacketKind::Flood => 1,
    });
    buf.extend_from_slice(&record.source.to_le_bytes());
    buf.extend_from_slice(&record.seq.to_le_bytes());
    buf.extend_from_slice(&record.emit_time.as_micros().to_le_bytes());
    buf.extend_from_slice(&record.payload);
    buf
}

/// Parse on-wire bytes back into a packet record.
pub fn decode(bytes: &[u8]) -> Result<PacketRecord, WireError> {
    if bytes.len() < HEADER_LEN {
        return Err(WireError::Truncated(bytes.len()));
    }
    if bytes[0..2] != MAGIC {
        return Err(WireError::BadMagic);
    }
    if bytes[2] != VERSION {
        return Err(WireError::BadVersion(bytes[2]));
    }
    let kind = match bytes[3] {
        0 => PacketKind::Telemetry,
        1 => PacketKind::Flood,
        k => return Err(WireError::BadKind(k)),
    };
    let source = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let seq = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    let emit_us = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let payload = bytes[HEADER_LEN..].to_vec();
    if kind == PacketKind::Telemetry && payload.len() != TELEMETRY_BODY_LEN {
        return Err(WireError::BadTelemetryBody(payload.len()));
    }
    Ok(PacketRecord {
        source,
        seq,
        emit_time: SimTime::from_micros(emit_us),
        kind,
        payload,
    })
}
