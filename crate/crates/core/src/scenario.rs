//! Scenario configuration: the TOML schema, validation, and built-in
//! replication presets.
//!
//! A scenario plus a seed fully determines a sim-mode run. Durations are
//! written in human units (seconds / milliseconds / microseconds per key
//! suffix) and converted to the microsecond clock at run start.

use crate::error::RunError;
use crate::ids::{DetectorConfig, ExtractorConfig, DEFAULT_GAMMA};
use crate::mitigation::MitigationConfig;
use crate::pipeline::{DegradationConfig, ServiceConfig};
use crate::time::{SimDuration, SimTime};
use crate::traffic::{AttackInterval, DeviceProfile};
use crate::transport::{ClockMode, TransportConfig};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const PRESET_NAMES: &[&str] = &[
    "benign-only",
    "attack10-nomitigation",
    "attack10-mitigation",
    "attack60-nomitigation",
    "attack60-mitigation",
    "probabilistic",
    "live-smoke",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub duration_s: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_sample_period_ms")]
    pub sample_period_ms: f64,
    pub devices: Vec<DeviceSpec>,
    #[serde(default)]
    pub attack_plan: AttackPlanSpec,
    #[serde(default)]
    pub transport: TransportSpec,
    #[serde(default)]
    pub service: ServiceSpec,
    #[serde(default)]
    pub ids: IdsSpec,
    #[serde(default)]
    pub mitigation: MitigationSpec,
}

fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}

fn default_sample_period_ms() -> f64 {
    100.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSpec {
    pub device_id: u32,
    #[serde(default = "default_period_s")]
    pub telemetry_period_s: f64,
    #[serde(default)]
    pub compromised: bool,
    #[serde(default = "default_attack_probability")]
    pub attack_probability: f64,
    #[serde(default = "default_attack_duration_s")]
    pub attack_duration_s: f64,
    #[serde(default = "default_attack_rate")]
    pub attack_rate_pps: f64,
    #[serde(default = "default_attack_payload")]
    pub attack_payload_size: usize,
}

fn default_period_s() -> f64 {
    1.0
}

fn default_attack_probability() -> f64 {
    0.10
}

fn default_attack_duration_s() -> f64 {
    10.0
}

fn default_attack_rate() -> f64 {
    1000.0
}

fn default_attack_payload() -> usize {
    1032
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PlanMode {
    /// No attacks at all, regardless of compromised flags.
    #[default]
    None,
    /// Fixed intervals applied to every compromised device.
    Scheduled,
    /// Per-tick sampling with `attack_probability`, gated to start no
    /// earlier than `start_after_s`.
    Probabilistic,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct AttackPlanSpec {
    #[serde(default)]
    pub mode: PlanMode,
    /// (start, duration) pairs in seconds, for scheduled plans.
    #[serde(default)]
    pub intervals_s: Vec<[f64; 2]>,
    /// Earliest initiation for probabilistic plans, seconds.
    #[serde(default)]
    pub start_after_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TransportMode {
    #[default]
    Sim,
    Live,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportSpec {
    #[serde(default)]
    pub mode: TransportMode,
    #[serde(default = "default_latency_us")]
    pub latency_us: u64,
    #[serde(default)]
    pub jitter_us: u64,
    #[serde(default = "default_port")]
    pub port: u16,
    #[serde(default)]
    pub recv_buffer_bytes: Option<usize>,
}

fn default_latency_us() -> u64 {
    200
}

fn default_port() -> u16 {
    5555
}

impl Default for TransportSpec {
    fn default() -> TransportSpec {
        TransportSpec {
            mode: TransportMode::Sim,
            latency_us: default_latency_us(),
            jitter_us: 0,
            port: default_port(),
            recv_buffer_bytes: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceSpec {
    #[serde(default = "default_service_ms")]
    pub ids_service_time_ms: f64,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default)]
    pub content_processing_time_ms: f64,
    /// 0 means unbounded.
    #[serde(default)]
    pub buffer_capacity: usize,
    #[serde(default)]
    pub degradation_enabled: bool,
    #[serde(default = "default_degradation_threshold")]
    pub degradation_queue_threshold: usize,
    #[serde(default = "default_degradation_factor")]
    pub degradation_factor: f64,
}

fn default_service_ms() -> f64 {
    1.0
}

fn default_batch_size() -> usize {
    10
}

fn default_degradation_threshold() -> usize {
    5000
}

fn default_degradation_factor() -> f64 {
    2.0
}

impl Default for ServiceSpec {
    fn default() -> ServiceSpec {
        ServiceSpec {
            ids_service_time_ms: default_service_ms(),
            batch_size: default_batch_size(),
            content_processing_time_ms: 0.0,
            buffer_capacity: 0,
            degradation_enabled: false,
            degradation_queue_threshold: default_degradation_threshold(),
            degradation_factor: default_degradation_factor(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdsSpec {
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_max_len")]
    pub max_len: f64,
    #[serde(default = "default_t_ref_s")]
    pub t_ref_s: f64,
    #[serde(default = "default_c_ref")]
    pub c_ref: f64,
    #[serde(default = "default_training_packets")]
    pub training_packets: usize,
    #[serde(default = "default_layer_dims")]
    pub layer_dims: Vec<usize>,
    #[serde(default = "default_ridge")]
    pub ridge: f64,
}

fn default_window() -> usize {
    10
}

fn default_max_len() -> f64 {
    1500.0
}

fn default_t_ref_s() -> f64 {
    1.0
}

fn default_c_ref() -> f64 {
    200.0
}

fn default_training_packets() -> usize {
    500
}

fn default_layer_dims() -> Vec<usize> {
    vec![3, 12, 12, 3]
}

fn default_ridge() -> f64 {
    1e-3
}

impl Default for IdsSpec {
    fn default() -> IdsSpec {
        IdsSpec {
            window: default_window(),
            max_len: default_max_len(),
            t_ref_s: default_t_ref_s(),
            c_ref: default_c_ref(),
            training_packets: default_training_packets(),
            layer_dims: default_layer_dims(),
            ridge: default_ridge(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MitigationSpec {
    #[serde(default = "default_true")]
    pub enabled: bool,
    #[serde(default = "default_window_size")]
    pub window_size: usize,
    #[serde(default = "default_majority")]
    pub majority: usize,
    #[serde(default = "default_drop_duration_s")]
    pub drop_duration_s: f64,
}

fn default_true() -> bool {
    true
}

fn default_window_size() -> usize {
    20
}

fn default_majority() -> usize {
    11
}

fn default_drop_duration_s() -> f64 {
    30.0
}

impl Default for MitigationSpec {
    fn default() -> MitigationSpec {
        MitigationSpec {
            enabled: true,
            window_size: default_window_size(),
            majority: default_majority(),
            drop_duration_s: default_drop_duration_s(),
        }
    }
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Scenario, RunError> {
        let scenario: Scenario = toml::from_str(text)
            .map_err(|e| RunError::config("config", e.message().to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn from_path(path: &Path) -> Result<Scenario, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::config("config", format!("{}: {e}", path.display())))?;
        Scenario::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), RunError> {
        if self.duration_s <= 0.0 || !self.duration_s.is_finite() {
            return Err(RunError::config("duration_s", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(RunError::config("gamma", "must be in [0, 1]"));
        }
        if self.sample_period_ms <= 0.0 {
            return Err(RunError::config("sample_period_ms", "must be positive"));
        }
        if self.devices.is_empty() {
            return Err(RunError::config("devices", "at least one device required"));
        }
        let mut ids: Vec<u32> = self.devices.iter().map(|d| d.device_id).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != self.devices.len() {
            return Err(RunError::config(
                "devices",
                "device_id values must be unique",
            ));
        }
        for d in &self.devices {
            d.profile(&self.attack_plan).validate()?;
        }
        if self.attack_plan.mode == PlanMode::Scheduled {
            for (i, iv) in self.attack_plan.intervals_s.iter().enumerate() {
                if iv[0] < 0.0 || iv[1] <= 0.0 {
                    return Err(RunError::config(
                        format!("attack_plan.intervals_s[{i}]"),
                        "start must be >= 0 and duration > 0",
                    ));
                }
            }
        }
        if self.service.ids_service_time_ms <= 0.0 {
            return Err(RunError::config(
                "service.ids_service_time_ms",
                "must be positive",
            ));
        }
        if self.service.batch_size == 0 {
            return Err(RunError::config("service.batch_size", "must be at least 1"));
        }
        if self.service.content_processing_time_ms < 0.0 {
            return Err(RunError::config(
                "service.content_processing_time_ms",
                "must be nonnegative",
            ));
        }
        if self.ids.window == 0 {
            return Err(RunError::config("ids.window", "must be at least 1"));
        }
        if self.ids.max_len <= 0.0 {
            return Err(RunError::config("ids.max_len", "must be positive"));
        }
        if self.ids.t_ref_s <= 0.0 {
            return Err(RunError::config("ids.t_ref_s", "must be positive"));
        }
        if self.ids.c_ref <= 0.0 {
            return Err(RunError::config("ids.c_ref", "must be positive"));
        }
        if self.ids.training_packets == 0 {
            return Err(RunError::config(
                "ids.training_packets",
                "must be at least 1",
            ));
        }
        if self.ids.layer_dims.len() < 2
            || self.ids.layer_dims.first() != Some(&3)
            || self.ids.layer_dims.last() != Some(&3)
            || self.ids.layer_dims.contains(&0)
        {
            return Err(RunError::config(
                "ids.layer_dims",
                "must start and end with 3 and contain no zero widths",
            ));
        }
        if self.mitigation.window_size == 0 {
            return Err(RunError::config(
                "mitigation.window_size",
                "must be at least 1",
            ));
        }
        if self.mitigation.majority == 0 || self.mitigation.majority > self.mitigation.window_size {
            return Err(RunError::config(
                "mitigation.majority",
                "must be in [1, window_size]",
            ));
        }
        if self.mitigation.drop_duration_s <= 0.0 {
            return Err(RunError::config(
                "mitigation.drop_duration_s",
                "must be positive",
            ));
        }
        Ok(())
    }

    pub fn duration(&self) -> SimDuration {
        SimDuration::from_secs_f64(self.duration_s)
    }

    pub fn sample_period(&self) -> SimDuration {
        SimDuration::from_millis_f64(self.sample_period_ms)
    }

    pub fn transport_config(&self) -> TransportConfig {
        TransportConfig {
            mode: match self.transport.mode {
                TransportMode::Sim => ClockMode::Virtual,
                TransportMode::Live => ClockMode::Wall,
            },
            latency: SimDuration::from_micros(self.transport.latency_us),
            jitter: SimDuration::from_micros(self.transport.jitter_us),
            port: self.transport.port,
            recv_buffer_bytes: self.transport.recv_buffer_bytes,
        }
    }

    pub fn service_config(&self) -> ServiceConfig {
        ServiceConfig {
            ids_service_time: SimDuration::from_millis_f64(self.service.ids_service_time_ms),
            batch_size: self.service.batch_size,
            content_processing_time: SimDuration::from_millis_f64(
                self.service.content_processing_time_ms,
            ),
            buffer_capacity: (self.service.buffer_capacity > 0)
                .then_some(self.service.buffer_capacity),
            degradation: self
                .service
                .degradation_enabled
                .then_some(DegradationConfig {
                    queue_threshold: self.service.degradation_queue_threshold,
                    factor: self.service.degradation_factor,
                }),
        }
    }

    pub fn extractor_config(&self) -> ExtractorConfig {
        ExtractorConfig {
            window: self.ids.window,
            max_len: self.ids.max_len,
            t_ref: SimDuration::from_secs_f64(self.ids.t_ref_s),
            c_ref: self.ids.c_ref,
        }
    }

    pub fn detector_config(&self) -> DetectorConfig {
        DetectorConfig {
            layer_dims: self.ids.layer_dims.clone(),
            ridge: self.ids.ridge,
            training_packets: self.ids.training_packets,
            gamma: self.gamma,
        }
    }

    pub fn mitigation_config(&self) -> MitigationConfig {
        MitigationConfig {
            enabled: self.mitigation.enabled,
            window_size: self.mitigation.window_size,
            majority: self.mitigation.majority,
            drop_duration: SimDuration::from_secs_f64(self.mitigation.drop_duration_s),
        }
    }

    /// Scheduled intervals of the plan, for compromised devices.
    pub fn scheduled_intervals(&self) -> Vec<AttackInterval> {
        self.attack_plan
            .intervals_s
            .iter()
            .map(|iv| {
                AttackInterval::new(
                    SimTime::from_secs_f64(iv[0]),
                    SimDuration::from_secs_f64(iv[1]),
                )
            })
            .collect()
    }
}

impl DeviceSpec {
    pub fn profile(&self, plan: &AttackPlanSpec) -> DeviceProfile {
        DeviceProfile {
            device_id: self.device_id,
            telemetry_period: SimDuration::from_secs_f64(self.telemetry_period_s),
            compromised: self.compromised && plan.mode != PlanMode::None,
            attack_probability: self.attack_probability,
            attack_duration: SimDuration::from_secs_f64(self.attack_duration_s),
            attack_rate: self.attack_rate_pps,
            attack_payload_size: self.attack_payload_size,
            attack_start_after: SimTime::from_secs_f64(plan.start_after_s),
        }
    }
}

fn two_device_testbed() -> Vec<DeviceSpec> {
    vec![
        DeviceSpec {
            device_id: 1,
            telemetry_period_s: 1.0,
            compromised: false,
            attack_probability: 0.0,
            attack_duration_s: 10.0,
            attack_rate_pps: 1000.0,
            attack_payload_size: 1032,
        },
        DeviceSpec {
            device_id: 2,
            telemetry_period_s: 1.0,
            compromised: true,
            attack_probability: 0.10,
            attack_duration_s: 10.0,
            attack_rate_pps: 1000.0,
            attack_payload_size: 1032,
        },
    ]
}

/// Built-in replication presets. The attack presets train over a benign
/// prefix (500 packets at 2/s takes 250 s) before the attack window opens
/// at t = 260 s. The no-mitigation variants slow the detector to 100
/// packets/s so a 1000/s flood overloads it ten-fold; the mitigation
/// variants run at the 1 ms default service time.
pub fn preset(name: &str) -> Option<Scenario> {
    let base = |name: &str| Scenario {
        name: name.to_string(),
        duration_s: 480.0,
        gamma: DEFAULT_GAMMA,
        sample_period_ms: 100.0,
        devices: two_device_testbed(),
        attack_plan: AttackPlanSpec::default(),
        transport: TransportSpec::default(),
        service: ServiceSpec::default(),
        ids: IdsSpec::default(),
        mitigation: MitigationSpec::default(),
    };
    let scheduled = |start: f64, dur: f64| AttackPlanSpec {
        mode: PlanMode::Scheduled,
        intervals_s: vec![[start, dur]],
        start_after_s: 0.0,
    };

    let scenario = match name {
        "benign-only" => {
            let mut s = base("benign-only");
            s.duration_s = 120.0;
            s.devices = (1..=6)
                .map(|id| DeviceSpec {
                    device_id: id,
                    telemetry_period_s: 1.0,
                    compromised: false,
                    attack_probability: 0.0,
                    attack_duration_s: 10.0,
                    attack_rate_pps: 1000.0,
                    attack_payload_size: 1032,
                })
                .collect();
            s
        }
        "attack10-nomitigation" => {
            let mut s = base("attack10-nomitigation");
            s.attack_plan = scheduled(260.0, 10.0);
            s.service.ids_service_time_ms = 10.0;
            s.mitigation.enabled = false;
            s
        }
        "attack10-mitigation" => {
            let mut s = base("attack10-mitigation");
            s.duration_s = 360.0;
            s.attack_plan = scheduled(260.0, 10.0);
            s
        }
        "attack60-nomitigation" => {
            let mut s = base("attack60-nomitigation");
            s.duration_s = 900.0;
            s.attack_plan = scheduled(260.0, 60.0);
            s.service.ids_service_time_ms = 10.0;
            s.mitigation.enabled = false;
            s
        }
        "attack60-mitigation" => {
            let mut s = base("attack60-mitigation");
            s.duration_s = 420.0;
            s.attack_plan = scheduled(260.0, 60.0);
            s
        }
        "probabilistic" => {
            let mut s = base("probabilistic");
            s.duration_s = 600.0;
            s.attack_plan = AttackPlanSpec {
                mode: PlanMode::Probabilistic,
                intervals_s: Vec::new(),
                start_after_s: 260.0,
            };
            s
        }
        "live-smoke" => {
            // Telemetry runs 40x faster than the sim presets so training
            // finishes in ~6 s of wall time. Wall-clock arrival stamps
            // jitter and cluster under scheduling noise, so the timing
            // features lose discrimination; the length feature is
            // jitter-immune and max_len is tightened until it separates
            // the regimes on its own.
            let mut s = base("live-smoke");
            s.duration_s = 28.0;
            s.devices = two_device_testbed();
            for d in &mut s.devices {
                d.telemetry_period_s = 0.025;
            }
            s.attack_plan = scheduled(15.0, 10.0);
            s.transport.mode = TransportMode::Live;
            s.ids.max_len = 1050.0;
            s.ids.c_ref = 300.0;
            s
        }
        _ => return None,
    };
    debug_assert!(scenario.validate().is_ok());
    Some(scenario)
}
