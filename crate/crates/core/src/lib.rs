//! Desk-scale UDP flood test-bed.
//!
//! Reproduces the full measurement loop around a flooded server: benign and
//! attack traffic generation, datagram transport (deterministic simulation
//! or live loopback sockets), a queueing server pipeline, an
//! auto-associative random-neural-network anomaly detector, a drop-window
//! mitigation state machine, and metric/chart emission.

pub mod artifacts;
pub mod chart;
pub mod error;
pub mod ids;
pub mod metrics;
pub mod mitigation;
pub mod pipeline;
pub mod runner;
pub mod scenario;
pub mod time;
pub mod traffic;
pub mod transport;
pub mod wire;

pub use error::RunError;
pub use time::{SimDuration, SimTime};
