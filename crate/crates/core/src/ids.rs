//! Anomaly detector: traffic metric extraction, an auto-associative random
//! neural network trained on the first benign packets, and batch decisions
//! against a threshold.
//!
//! The detector reconstructs each normalized metric vector and scores the
//! mean absolute difference between input and reconstruction. Weights are
//! nonnegative throughout: hidden layers are a fixed random nonnegative
//! projection, and the readout is a ridge-regularized nonnegative
//! least-squares fit, so every activation stays inside [0, 1).

use crate::error::RunError;
use crate::time::{SimDuration, SimTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Detection threshold fixed for the replication presets.
pub const DEFAULT_GAMMA: f64 = 0.3;
/// Accuracy-optimal threshold observed on the reference traffic mix,
/// exposed as the named preset `tuned`.
pub const TUNED_GAMMA: f64 = 0.3787;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Normal,
    Attack,
}

/// Normalized traffic features over recent packets, each clamped to [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    /// Mean datagram length over the window, relative to `max_len`.
    pub x1: f64,
    /// Inverted mean inter-arrival time relative to `t_ref`.
    pub x2: f64,
    /// Packet count in the trailing second relative to `c_ref`.
    pub x3: f64,
}

impl MetricVector {
    pub fn new(x1: f64, x2: f64, x3: f64) -> MetricVector {
        MetricVector {
            x1: clamp01(x1),
            x2: clamp01(x2),
            x3: clamp01(x3),
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x1, self.x2, self.x3]
    }

    pub fn from_array(a: [f64; 3]) -> MetricVector {
        MetricVector::new(a[0], a[1], a[2])
    }
}

fn clamp01(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtractorConfig {
    /// Sliding window length in packets.
    pub window: usize,
    /// Normalizing datagram length in bytes.
    pub max_len: f64,
    /// Normalizing inter-arrival reference.
    pub t_ref: SimDuration,
    /// Normalizing trailing-second packet count.
    pub c_ref: f64,
}

impl Default for ExtractorConfig {
    fn default() -> ExtractorConfig {
        ExtractorConfig {
            window: 10,
            max_len: 1500.0,
            t_ref: SimDuration::from_secs(1),
            c_ref: 200.0,
        }
    }
}

/// Sliding-window feature extractor fed one packet at a time, in arrival
/// order. Uses only arrival timestamps and datagram lengths; the truth
/// kind never reaches it.
#[derive(Debug, Clone)]
pub struct MetricExtractor {
    cfg: ExtractorConfig,
    window: VecDeque<(SimTime, usize)>,
    trailing: VecDeque<SimTime>,
}

impl MetricExtractor {
    pub fn new(cfg: ExtractorConfig) -> MetricExtractor {
        MetricExtractor {
            window: VecDeque::with_capacity(cfg.window + 1),
            trailing: VecDeque::new(),
            cfg,
        }
    }

    /// Packets in `(now - t_ref, now]`, current packet included.
    pub fn trailing_count(&self) -> usize {
        self.trailing.len()
    }

    /// Push one arrival and return the metric vector for the window ending
    /// at it.
    pub fn push(&mut self, arrival: SimTime, wire_len: usize) -> MetricVector {
        self.window.push_back((arrival, wire_len));
        if self.window.len() > self.cfg.window {
            self.window.pop_front();
        }
        self.trailing.push_back(arrival);
        // Trailing window is (arrival - t_ref, arrival], current included.
        let cutoff = SimTime::from_micros(
            arrival
                .as_micros()
                .saturating_sub(self.cfg.t_ref.as_micros()),
        );
        while let Some(&front) = self.trailing.front() {
            if front <= cutoff {
                self.trailing.pop_front();
            } else {
                break;
            }
        }

        let n = self.window.len();
        let mean_len = self.window.iter().map(|&(_, l)| l as f64).sum::<f64>() / n as f64;
        let x1 = mean_len / self.cfg.max_len;

        // Mean inter-arrival over the window; a single-packet window reads 0
        // by convention.
        let x2 = if n < 2 {
            0.0
        } else {
            let span = self.window.back().unwrap().0 - self.window.front().unwrap().0;
            let mean_gap = span.as_secs_f64() / (n - 1) as f64;
            1.0 - clamp01(mean_gap / self.cfg.t_ref.as_secs_f64())
        };

        let x3 = self.trailing.len() as f64 / self.cfg.c_ref;
        MetricVector::new(x1, x2, x3)
    }
}

/// Collects the metric vectors of the first benign packets; training fires
/// exactly once, when the buffer fills.
#[derive(Debug, Clone)]
pub struct TrainingBuffer {
    capacity: usize,
    vectors: Vec<MetricVector>,
    /// (source, seq) of each contributing packet, for audit.
    keys: Vec<(u32, u32)>,
}

impl TrainingBuffer {
    pub fn new(capacity: usize) -> TrainingBuffer {
        TrainingBuffer {
            capacity,
            vectors: Vec::with_capacity(capacity),
            keys: Vec::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, x: MetricVector, key: (u32, u32)) {
        debug_assert!(!self.is_full());
        self.vectors.push(x);
        self.keys.push(key);
    }

    pub fn is_full(&self) -> bool {
        self.vectors.len() >= self.capacity
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[MetricVector] {
        &self.vectors
    }

    pub fn keys(&self) -> &[(u32, u32)] {
        &self.keys
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Layer widths, input and output included.
    pub layer_dims: Vec<usize>,
    /// Ridge constant for the readout fit.
    pub ridge: f64,
    /// Benign packets consumed before training triggers.
    pub training_packets: usize,
    pub gamma: f64,
}

impl Default for DetectorConfig {
    fn default() -> DetectorConfig {
        DetectorConfig {
            layer_dims: vec![3, 12, 12, 3],
            ridge: 1e-3,
            training_packets: 500,
            gamma: DEFAULT_GAMMA,
        }
    }
}

/// Random-neural-network rate activation with unit firing rate and no
/// inhibitory input: v / (1 + v), bounded in [0, 1) for v >= 0.
fn rate_activation(v: f64) -> f64 {
    let v = v.max(0.0);
    v / (1.0 + v)
}

/// Row-major nonnegative weight matrix.
type Matrix = Vec<Vec<f64>>;

fn mat_vec(m: &Matrix, v: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(w, a)| w * a).sum())
        .collect()
}

/// Trained auto-associative network with frozen per-feature normalization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AutoAssocRnn {
    pub format_version: u32,
    pub layer_dims: Vec<usize>,
    /// Fixed random nonnegative projections, one per hidden layer.
    pub hidden_weights: Vec<Matrix>,
    /// Nonnegative readout mapping last hidden activations to the input.
    pub output_weights: Matrix,
    /// Per-feature minima of the training prefix.
    pub norm_min: Vec<f64>,
    /// Per-feature spans; a zero-variance feature gets span 1.
    pub norm_span: Vec<f64>,
    /// Features whose training span collapsed to a point.
    pub degenerate_features: Vec<bool>,
    pub seed: u64,
    pub trained: bool,
    /// Mean reconstruction score over the training set.
    pub training_residual: f64,
}

impl AutoAssocRnn {
    /// Fit on a full training buffer: normalization constants from the
    /// prefix, seeded random hidden weights in [0, 1/fan_in], and a
    /// ridge-regularized nonnegative least-squares readout.
    pub fn train(
        vectors: &[MetricVector],
        cfg: &DetectorConfig,
        seed: u64,
    ) -> Result<AutoAssocRnn, RunError> {
        if vectors.is_empty() {
            return Err(RunError::Contract("training on an empty buffer".into()));
        }
        let dims = &cfg.layer_dims;
        if dims.len() < 2 || dims[0] != 3 || *dims.last().unwrap() != 3 {
            return Err(RunError::config(
                "ids.layer_dims",
                "must start and end with 3",
            ));
        }

        let mut norm_min = vec![f64::INFINITY; 3];
        let mut norm_max = [f64::NEG_INFINITY; 3];
        for v in vectors {
            for (j, c) in v.as_array().iter().enumerate() {
                norm_min[j] = norm_min[j].min(*c);
                norm_max[j] = norm_max[j].max(*c);
            }
        }
        let mut norm_span = Vec::with_capacity(3);
        let mut degenerate_features = Vec::with_capacity(3);
        for j in 0..3 {
            let span = norm_max[j] - norm_min[j];
            if span < 1e-12 {
                norm_span.push(1.0);
                degenerate_features.push(true);
            } else {
                norm_span.push(span);
                degenerate_features.push(false);
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0x696473); // "ids"
        let mut hidden_weights = Vec::new();
        for l in 1..dims.len() - 1 {
            let fan_in = dims[l - 1];
            let rows = dims[l];
            let bound = 1.0 / fan_in as f64;
            let w: Matrix = (0..rows)
                .map(|_| (0..fan_in).map(|_| rng.gen_range(0.0..bound)).collect())
                .collect();
            hidden_weights.push(w);
        }

        // Hidden activations for every training row.
        let normalize = |x: &MetricVector| -> Vec<f64> {
            x.as_array()
                .iter()
                .enumerate()
                .map(|(j, c)| clamp01((c - norm_min[j]) / norm_span[j]))
                .collect()
        };
        let targets: Vec<Vec<f64>> = vectors.iter().map(&normalize).collect();
        let acts: Vec<Vec<f64>> = targets
            .iter()
            .map(|z| {
                let mut a = z.clone();
                for w in &hidden_weights {
                    a = mat_vec(w, &a).into_iter().map(rate_activation).collect();
                }
                a
            })
            .collect();

        let d = *dims.get(dims.len() - 2).unwrap();
        let out_dim = 3;
        let mut output_weights = Vec::with_capacity(out_dim);
        for j in 0..out_dim {
            let y: Vec<f64> = targets.iter().map(|t| t[j]).collect();
            output_weights.push(nnls_ridge(&acts, &y, d, cfg.ridge));
        }

        let mut model = AutoAssocRnn {
            format_version: 1,
            layer_dims: dims.clone(),
            hidden_weights,
            output_weights,
            norm_min,
            norm_span,
            degenerate_features,
            seed,
            trained: true,
            training_residual: 0.0,
        };
        let residual = vectors
            .iter()
            .map(|x| score(x, &model.forward(x).unwrap()))
            .sum::<f64>()
            / vectors.len() as f64;
        model.training_residual = residual;
        Ok(model)
    }

    /// Reconstruct a metric vector. Errors on an untrained model.
    pub fn forward(&self, x: &MetricVector) -> Result<MetricVector, RunError> {
        if !self.trained {
            return Err(RunError::Contract("forward on untrained model".into()));
        }
        let mut a: Vec<f64> = x
            .as_array()
            .iter()
            .enumerate()
            .map(|(j, c)| clamp01((c - self.norm_min[j]) / self.norm_span[j]))
            .collect();
        for w in &self.hidden_weights {
            a = mat_vec(w, &a).into_iter().map(rate_activation).collect();
        }
        let z_hat = mat_vec(&self.output_weights, &a);
        let out: Vec<f64> = z_hat
            .iter()
            .enumerate()
            .map(|(j, z)| clamp01(self.norm_min[j] + self.norm_span[j] * clamp01(*z)))
            .collect();
        Ok(MetricVector::new(out[0], out[1], out[2]))
    }

    /// Hidden activations for an input, exposed for boundedness checks.
    pub fn activations(&self, x: &MetricVector) -> Vec<Vec<f64>> {
        let mut a: Vec<f64> = x
            .as_array()
            .iter()
            .enumerate()
            .map(|(j, c)| clamp01((c - self.norm_min[j]) / self.norm_span[j]))
            .collect();
        let mut all = Vec::new();
        for w in &self.hidden_weights {
            a = mat_vec(w, &a).into_iter().map(rate_activation).collect();
            all.push(a.clone());
        }
        all
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), RunError> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| RunError::Contract(format!("model serialize: {e}")))?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<AutoAssocRnn, RunError> {
        let text = std::fs::read_to_string(path)?;
        let model: AutoAssocRnn = serde_json::from_str(&text)
            .map_err(|e| RunError::Contract(format!("model parse: {e}")))?;
        if model.format_version != 1 {
            return Err(RunError::Contract(format!(
                "unsupported model format version {}",
                model.format_version
            )));
        }
        Ok(model)
    }
}

/// Coordinate-descent solve of min ||A w - y||^2 + ridge * ||w||^2 with
/// w >= 0. `a` is row-major n x d.
fn nnls_ridge(a: &[Vec<f64>], y: &[f64], d: usize, ridge: f64) -> Vec<f64> {
    // Gram matrix and right-hand side.
    let mut g = vec![vec![0.0; d]; d];
    let mut b = vec![0.0; d];
    for (row, &target) in a.iter().zip(y) {
        for i in 0..d {
            b[i] += row[i] * target;
            for j in 0..d {
                g[i][j] += row[i] * row[j];
            }
        }
    }

    let mut w = vec![0.0; d];
    for _ in 0..2000 {
        let mut max_delta: f64 = 0.0;
        for i in 0..d {
            let denom = g[i][i] + ridge;
            if denom <= 0.0 {
                continue;
            }
            let mut resid = b[i];
            for j in 0..d {
                if j != i {
                    resid -= g[i][j] * w[j];
                }
            }
            let next = (resid / denom).max(0.0);
            max_delta = max_delta.max((next - w[i]).abs());
            w[i] = next;
        }
        if max_delta < 1e-10 {
            break;
        }
    }
    w
}

/// Mean absolute component difference between input and reconstruction,
/// in [0, 1].
pub fn score(x: &MetricVector, x_hat: &MetricVector) -> f64 {
    let a = x.as_array();
    let b = x_hat.as_array();
    a.iter().zip(&b).map(|(p, q)| (p - q).abs()).sum::<f64>() / 3.0
}

/// One batch decision: the mean of the per-packet scores thresholded at
/// gamma (strict inequality).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdsDecision {
    pub batch_id: u64,
    pub score: f64,
    pub label: Label,
    pub gamma: f64,
    pub decide_time: SimTime,
}

pub fn decide(batch_id: u64, scores: &[f64], gamma: f64, decide_time: SimTime) -> IdsDecision {
    debug_assert!(!scores.is_empty());
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    IdsDecision {
        batch_id,
        score: mean,
        label: if mean > gamma {
            Label::Attack
        } else {
            Label::Normal
        },
        gamma,
        decide_time,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn benign_extractor_stream(n: usize) -> Vec<MetricVector> {
        // Two staggered 1 Hz telemetry sources: 24-byte datagrams with
        // alternating 0.4 s / 0.6 s gaps.
        let cfg = ExtractorConfig::default();
        let mut ex = MetricExtractor::new(cfg);
        let mut out = Vec::new();
        let mut t = 0u64;
        for k in 0..n {
            out.push(ex.push(SimTime::from_micros(t), 24));
            t += if k % 2 == 0 { 400_000 } else { 600_000 };
        }
        out
    }

    #[test]
    fn benign_metrics_hand_computed() {
        // Window of 10 packets, 24 bytes, uniform 0.5 s gaps:
        //   x1 = 24 / 1500 = 0.016
        //   x2 = 1 - (4.5 s / 9) / 1 s = 0.5
        //   x3 = packets in trailing 1 s = 2 -> 2 / 200 = 0.01
        let mut ex = MetricExtractor::new(ExtractorConfig::default());
        let mut last = MetricVector::new(0.0, 0.0, 0.0);
        for k in 0..10u64 {
            last = ex.push(SimTime::from_micros(k * 500_000), 24);
        }
        assert!((last.x1 - 0.016).abs() < 1e-12);
        assert!((last.x2 - 0.5).abs() < 1e-12);
        assert!((last.x3 - 0.01).abs() < 1e-12);
    }

    #[test]
    fn flood_metrics_hand_computed() {
        // 1032-byte datagrams at 1000/s, after a full second of flooding:
        //   x1 = 1032 / 1500 = 0.688
        //   x2 = 1 - 0.001 / 1 = 0.999
        //   x3 = 1000 in trailing second -> clamp(1000 / 200) = 1.0
        let mut ex = MetricExtractor::new(ExtractorConfig::default());
        let mut last = MetricVector::new(0.0, 0.0, 0.0);
        for k in 0..1500u64 {
            last = ex.push(SimTime::from_micros(k * 1000), 1032);
        }
        assert!((last.x1 - 0.688).abs() < 1e-12);
        assert!((last.x2 - 0.999).abs() < 1e-9);
        assert!((last.x3 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_packet_window_x2_zero() {
        let mut ex = MetricExtractor::new(ExtractorConfig::default());
        let v = ex.push(SimTime::from_secs_f64(3.0), 100);
        assert_eq!(v.x2, 0.0);
    }

    #[test]
    fn trailing_count_empty_before_any_packet() {
        let ex = MetricExtractor::new(ExtractorConfig::default());
        assert_eq!(ex.trailing_count(), 0);
    }

    #[test]
    fn trailing_count_prunes_after_silence() {
        let mut ex = MetricExtractor::new(ExtractorConfig::default());
        for k in 0..5u64 {
            ex.push(SimTime::from_micros(k * 100_000), 24);
        }
        // 100 s of silence, then one packet: only itself in the window.
        let v = ex.push(SimTime::from_secs_f64(100.0), 24);
        assert_eq!(ex.trailing_count(), 1);
        assert!((v.x3 - 1.0 / 200.0).abs() < 1e-12);
    }

    fn train_default(data: &[MetricVector], seed: u64) -> AutoAssocRnn {
        AutoAssocRnn::train(data, &DetectorConfig::default(), seed).unwrap()
    }

    #[test]
    fn training_is_deterministic() {
        let data = benign_extractor_stream(500);
        let a = train_default(&data, 42);
        let b = train_default(&data, 42);
        assert_eq!(a.hidden_weights, b.hidden_weights);
        assert_eq!(a.output_weights, b.output_weights);
        assert_eq!(a.norm_min, b.norm_min);
        assert_eq!(a.norm_span, b.norm_span);
    }

    #[test]
    fn constant_training_data_reconstructs_exactly() {
        let data = vec![MetricVector::new(0.3, 0.4, 0.5); 500];
        let model = train_default(&data, 1);
        assert!(model.degenerate_features.iter().all(|&d| d));
        let x_hat = model.forward(&data[0]).unwrap();
        assert!(score(&data[0], &x_hat) <= 1e-6);
    }

    #[test]
    fn training_vectors_reconstruct_well() {
        // Self-consistency: >= 95% of training vectors reconstruct within 0.1.
        let data = benign_extractor_stream(500);
        let model = train_default(&data, 7);
        let ok = data
            .iter()
            .filter(|x| score(x, &model.forward(x).unwrap()) <= 0.1)
            .count();
        assert!(ok * 100 >= data.len() * 95, "only {ok}/500 within 0.1");
        assert!(model.training_residual <= 0.1);
    }

    #[test]
    fn flood_signature_scores_past_gamma() {
        // Separation: a detector trained on benign windows must report a
        // large reconstruction error for the flood signature.
        let data = benign_extractor_stream(500);
        for seed in 0..10u64 {
            let model = train_default(&data, seed);
            let flood = MetricVector::new(0.688, 0.999, 1.0);
            let err = score(&flood, &model.forward(&flood).unwrap());
            assert!(err >= 0.3, "seed {seed}: separation too weak ({err:.4})");
        }
    }

    #[test]
    fn benign_centroid_reconstructs_close() {
        let data = benign_extractor_stream(500);
        let model = train_default(&data, 3);
        let n = data.len() as f64;
        let centroid = MetricVector::new(
            data.iter().map(|v| v.x1).sum::<f64>() / n,
            data.iter().map(|v| v.x2).sum::<f64>() / n,
            data.iter().map(|v| v.x3).sum::<f64>() / n,
        );
        let x_hat = model.forward(&centroid).unwrap();
        for (a, b) in centroid.as_array().iter().zip(&x_hat.as_array()) {
            assert!((a - b).abs() <= 0.1);
        }
    }

    #[test]
    fn untrained_forward_is_contract_violation() {
        let data = benign_extractor_stream(500);
        let mut model = train_default(&data, 3);
        model.trained = false;
        assert!(model.forward(&MetricVector::new(0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn all_zero_input_bounded() {
        let data = benign_extractor_stream(500);
        let model = train_default(&data, 5);
        let x_hat = model.forward(&MetricVector::new(0.0, 0.0, 0.0)).unwrap();
        for c in x_hat.as_array() {
            assert!(c.is_finite() && (0.0..1.0).contains(&c));
        }
    }

    #[test]
    fn model_round_trips_through_file() {
        let data = benign_extractor_stream(500);
        let model = train_default(&data, 9);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        model.save(&path).unwrap();
        let loaded = AutoAssocRnn::load(&path).unwrap();
        assert_eq!(loaded.output_weights, model.output_weights);
        let x = MetricVector::new(0.2, 0.5, 0.1);
        assert_eq!(loaded.forward(&x).unwrap(), model.forward(&x).unwrap());
    }

    #[test]
    fn decide_examples() {
        let t = SimTime::ZERO;
        assert_eq!(decide(0, &[0.0; 10], 0.3, t).label, Label::Normal);
        // Strict inequality at the threshold.
        assert_eq!(decide(0, &[0.31; 10], 0.3, t).label, Label::Attack);
        assert_eq!(decide(0, &[0.3; 10], 0.3, t).label, Label::Normal);
        let mixed = [0.7, 0.7, 0.7, 0.7, 0.7, 0.0, 0.0, 0.0, 0.0, 0.0];
        let d = decide(1, &mixed, 0.3, t);
        assert!((d.score - 0.35).abs() < 1e-12);
        assert_eq!(d.label, Label::Attack);
    }

    #[test]
    fn score_examples() {
        let z = MetricVector::new(0.0, 0.0, 0.0);
        let o = MetricVector::new(1.0, 1.0, 1.0);
        assert_eq!(score(&z, &z), 0.0);
        assert_eq!(score(&o, &z), 1.0);
        let a = MetricVector::new(0.6, 0.9, 1.0);
        let b = MetricVector::new(0.1, 0.1, 0.2);
        assert!((score(&a, &b) - 0.7).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn score_is_metric_like(
            a in proptest::array::uniform3(0.0..=1.0f64),
            b in proptest::array::uniform3(0.0..=1.0f64),
        ) {
            let x = MetricVector::from_array(a);
            let y = MetricVector::from_array(b);
            prop_assert_eq!(score(&x, &x), 0.0);
            prop_assert_eq!(score(&x, &y), score(&y, &x));
            prop_assert!(score(&x, &y) <= 1.0 + 1e-12);
            prop_assert!(score(&x, &y) >= 0.0);
        }

        #[test]
        fn decide_monotone_in_scores_and_gamma(
            scores in proptest::collection::vec(0.0..=1.0f64, 10),
            bump in 0.0..=0.5f64,
            idx in 0usize..10,
            gamma in 0.0..=1.0f64,
            gamma_up in 0.0..=0.5f64,
        ) {
            let base = decide(0, &scores, gamma, SimTime::ZERO);
            // Raising any one score cannot flip Attack -> Normal.
            let mut raised = scores.clone();
            raised[idx] = (raised[idx] + bump).min(1.0);
            let after = decide(0, &raised, gamma, SimTime::ZERO);
            if base.label == Label::Attack {
                prop_assert_eq!(after.label, Label::Attack);
            }
            // Raising gamma cannot flip Normal -> Attack.
            let stricter = decide(0, &scores, (gamma + gamma_up).min(1.0), SimTime::ZERO);
            if base.label == Label::Normal {
                prop_assert_eq!(stricter.label, Label::Normal);
            }
        }

        #[test]
        fn threshold_sweep_is_monotone(
            scores in proptest::collection::vec(0.0..=1.0f64, 1..60),
            truth in proptest::collection::vec(proptest::bool::ANY, 60),
        ) {
            // TPR and FPR are stepwise nonincreasing as gamma rises.
            let pairs: Vec<(f64, bool)> =
                scores.iter().copied().zip(truth.iter().copied()).collect();
            let rates = |gamma: f64| {
                let mut tp = 0u32; let mut fnn = 0u32; let mut fp = 0u32; let mut tn = 0u32;
                for &(s, attack) in &pairs {
                    let flagged = s > gamma;
                    match (attack, flagged) {
                        (true, true) => tp += 1,
                        (true, false) => fnn += 1,
                        (false, true) => fp += 1,
                        (false, false) => tn += 1,
                    }
                }
                let tpr = if tp + fnn > 0 { tp as f64 / (tp + fnn) as f64 } else { 1.0 };
                let fpr = if fp + tn > 0 { fp as f64 / (fp + tn) as f64 } else { 0.0 };
                (tpr, fpr)
            };
            let grid: Vec<f64> = (0..=20).map(|k| k as f64 * 0.05).collect();
            let mut prev = rates(grid[0]);
            for &g in &grid[1..] {
                let cur = rates(g);
                prop_assert!(cur.0 <= prev.0 + 1e-12);
                prop_assert!(cur.1 <= prev.1 + 1e-12);
                prev = cur;
            }
        }

        #[test]
        fn weights_nonnegative_and_activations_bounded(
            seed in any::<u64>(),
            probe in proptest::array::uniform3(0.0..=1.0f64),
        ) {
            let data = benign_extractor_stream(120);
            let model = AutoAssocRnn::train(&data, &DetectorConfig::default(), seed).unwrap();
            for layer in model.hidden_weights.iter().chain(std::iter::once(&model.output_weights)) {
                for row in layer {
                    for &w in row {
                        prop_assert!(w >= 0.0);
                    }
                }
            }
            let x = MetricVector::from_array(probe);
            for layer in model.activations(&x) {
                for a in layer {
                    prop_assert!((0.0..1.0).contains(&a), "activation {a} outside [0,1)");
                }
            }
            let x_hat = model.forward(&x).unwrap();
            for c in x_hat.as_array() {
                prop_assert!((0.0..=1.0).contains(&c));
            }
            // Forward is deterministic given a trained model.
            prop_assert_eq!(model.forward(&x).unwrap(), x_hat);
        }
    }
}
