//! Drop-window defense.
//!
//! While monitoring, the state machine watches the most recent per-packet
//! classifications; a strict majority of attack labels in a full window
//! triggers a drop: the input buffer is flushed and every arrival inside
//! the next drop window is discarded at the transport boundary. At the
//! deadline, monitoring resumes with an empty window and the cycle can
//! repeat.

use crate::error::RunError;
use crate::ids::Label;
use crate::time::{SimDuration, SimTime};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MitigationConfig {
    pub enabled: bool,
    /// Labels held in the monitoring window.
    pub window_size: usize,
    /// Attack labels required to trigger (strict majority: ties do not).
    pub majority: usize,
    pub drop_duration: SimDuration,
}

impl Default for MitigationConfig {
    fn default() -> MitigationConfig {
        MitigationConfig {
            enabled: true,
            window_size: 20,
            majority: 11,
            drop_duration: SimDuration::from_secs(30),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Monitoring,
    Dropping { deadline: SimTime },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    None,
    ActivateDrop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MitigationEventKind {
    Activate,
    Deadline,
}

#[derive(Debug, Clone)]
pub struct MitigationState {
    cfg: MitigationConfig,
    phase: Phase,
    window: VecDeque<Label>,
    activation_count: u64,
}

impl MitigationState {
    pub fn new(cfg: MitigationConfig) -> MitigationState {
        MitigationState {
            window: VecDeque::with_capacity(cfg.window_size + 1),
            cfg,
            phase: Phase::Monitoring,
            activation_count: 0,
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn is_dropping(&self) -> bool {
        matches!(self.phase, Phase::Dropping { .. })
    }

    pub fn deadline(&self) -> Option<SimTime> {
        match self.phase {
            Phase::Dropping { deadline } => Some(deadline),
            Phase::Monitoring => None,
        }
    }

    pub fn activation_count(&self) -> u64 {
        self.activation_count
    }

    pub fn window_len(&self) -> usize {
        self.window.len()
    }

    /// Feed one per-packet label while monitoring. Returns `ActivateDrop`
    /// exactly when the freshly full window holds a strict majority of
    /// attack labels; the window clears and the drop deadline is armed.
    /// Calling this while dropping is a caller bug.
    pub fn observe(&mut self, label: Label, now: SimTime) -> Result<Action, RunError> {
        if self.is_dropping() {
            return Err(RunError::Contract(
                "mitigation observe() called during a drop window".into(),
            ));
        }
        self.window.push_back(label);
        if self.window.len() > self.cfg.window_size {
            self.window.pop_front();
        }
        if self.window.len() == self.cfg.window_size {
            let attacks = self.window.iter().filter(|&&l| l == Label::Attack).count();
            if attacks >= self.cfg.majority {
                self.window.clear();
                self.phase = Phase::Dropping {
                    deadline: now + self.cfg.drop_duration,
                };
                self.activation_count += 1;
                return Ok(Action::ActivateDrop);
            }
        }
        Ok(Action::None)
    }

    /// Resume monitoring at (or after) the deadline; the window restarts
    /// empty. The boundary is closed: `now == deadline` resumes.
    pub fn on_deadline(&mut self, now: SimTime) -> Result<(), RunError> {
        match self.phase {
            Phase::Dropping { deadline } if now >= deadline => {
                self.phase = Phase::Monitoring;
                self.window.clear();
                Ok(())
            }
            Phase::Dropping { deadline } => Err(RunError::Contract(format!(
                "deadline processed early: now {now} < deadline {deadline}"
            ))),
            Phase::Monitoring => Err(RunError::Contract(
                "deadline processed while monitoring".into(),
            )),
        }
    }
}
