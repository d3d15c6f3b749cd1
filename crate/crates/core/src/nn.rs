//! Feed-forward classifiers: ReLU hidden layers, softmax output,
//! cross-entropy with an optional L1 penalty, mini-batch training with early
//! stopping on validation loss.
//!
//! Parameters live in one flat vector. Layer `l` stores its weight matrix
//! (`out × in`, row-major) followed by its bias vector.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::datagen::{Sample, FEATURE_DIM};
use crate::error::{Error, Result};
use crate::rng::substream;

/// Probabilities below this are clamped inside the logarithm of the loss.
pub const PROB_CLAMP: f64 = 1e-12;

/// The three architectures compared in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    /// Input wired straight to the softmax output.
    Lp,
    /// One hidden layer of 5 units.
    Nn1,
    /// Five hidden layers of 30 units.
    Nn5,
}

impl Arch {
    pub const ALL: [Arch; 3] = [Arch::Lp, Arch::Nn1, Arch::Nn5];

    pub fn layer_sizes(&self, classes: usize) -> Vec<usize> {
        match self {
            Arch::Lp => vec![FEATURE_DIM, classes],
            Arch::Nn1 => vec![FEATURE_DIM, 5, classes],
            Arch::Nn5 => vec![FEATURE_DIM, 30, 30, 30, 30, 30, classes],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Arch::Lp => "lp",
            Arch::Nn1 => "nn1",
            Arch::Nn5 => "nn5",
        }
    }
}

impl std::str::FromStr for Arch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lp" => Ok(Arch::Lp),
            "nn1" => Ok(Arch::Nn1),
            "nn5" => Ok(Arch::Nn5),
            other => Err(Error::config(
                "arch",
                format!("unknown architecture {other:?}"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[1] * (w[0] + 1)).sum()
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 {
        return Err(Error::Shape(format!(
            "need at least 2 layers, got {}",
            sizes.len()
        )));
    }
    if sizes[0] != FEATURE_DIM {
        return Err(Error::Shape(format!(
            "input layer has {} units, expected {FEATURE_DIM}",
            sizes[0]
        )));
    }
    if sizes.iter().any(|&n| n == 0) {
        return Err(Error::Shape(format!("empty layer in {sizes:?}")));
    }
    if *sizes.last().unwrap() < 2 {
        return Err(Error::Shape("output layer needs at least 2 classes".into()));
    }
    Ok(())
}

/// Weights uniform in `±1/√fan_in`, biases zero.
pub fn init_mlp<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<MlpModel> {
    check_sizes(sizes)?;
    let mut params = Vec::with_capacity(param_count(sizes));
    for w in sizes.windows(2) {
        let bound = 1.0 / (w[0] as f64).sqrt();
        params.extend((0..w[0] * w[1]).map(|_| rng.gen_range(-bound..bound)));
        params.extend(std::iter::repeat(0.0).take(w[1]));
    }
    Ok(MlpModel {
        sizes: sizes.to_vec(),
        params,
    })
}

/// Per-sample scratch space for forward and backward passes.
struct Scratch {
    /// `acts[0]` is the input; `acts[l + 1]` is the output of layer `l`
    /// (post-ReLU for hidden layers, logits for the last).
    acts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

impl MlpModel {
    pub fn from_params(sizes: &[usize], params: Vec<f64>) -> Result<Self> {
        check_sizes(sizes)?;
        if params.len() != param_count(sizes) {
            return Err(Error::Shape(format!(
                "{} parameters for layer sizes {sizes:?} (expected {})",
                params.len(),
                param_count(sizes)
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("model parameters"));
        }
        Ok(MlpModel {
            sizes: sizes.to_vec(),
            params,
        })
    }

    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        MlpModel::from_params(sizes, vec![0.0; param_count(sizes)])
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn n_classes(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Offsets of the weight block and bias block of layer `l`.
    fn offsets(&self, l: usize) -> (usize, usize) {
        let start: usize = self.sizes[..=l].windows(2).map(|w| w[1] * (w[0] + 1)).sum();
        (start, start + self.sizes[l] * self.sizes[l + 1])
    }

    /// `(weights, biases)` of layer `l`.
    pub fn layer(&self, l: usize) -> (&[f64], &[f64]) {
        let (w, b) = self.offsets(l);
        (&self.params[w..b], &self.params[b..b + self.sizes[l + 1]])
    }

    /// Whether parameter `i` is a weight (as opposed to a bias).
    fn weight_mask(&self) -> Vec<bool> {
        let mut mask = Vec::with_capacity(self.params.len());
        for w in self.sizes.windows(2) {
            mask.extend(std::iter::repeat(true).take(w[0] * w[1]));
            mask.extend(std::iter::repeat(false).take(w[1]));
        }
        mask
    }

    /// `Σ|W|` over weights only.
    pub fn l1_norm(&self) -> f64 {
        let mut s = 0.0;
        for l in 0..self.sizes.len() - 1 {
            s += self.layer(l).0.iter().map(|w| w.abs()).sum::<f64>();
        }
        s
    }

    fn scratch(&self) -> Scratch {
        let widest = *self.sizes.iter().max().unwrap();
        Scratch {
            acts: self.sizes.iter().map(|&n| vec![0.0; n]).collect(),
            delta: Vec::with_capacity(widest),
            delta_prev: Vec::with_capacity(widest),
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.sizes[0] {
            return Err(Error::Shape(format!(
                "input has {} features, model expects {}",
                x.len(),
                self.sizes[0]
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network input"));
        }
        Ok(())
    }

    /// Fills `s.acts`; the last entry holds logits.
    fn run(&self, x: &[f64], s: &mut Scratch) {
        s.acts[0].copy_from_slice(x);
        let last = self.sizes.len() - 2;
        for l in 0..=last {
            let (w, b) = self.layer(l);
            let n_in = self.sizes[l];
            let (head, tail) = s.acts.split_at_mut(l + 1);
            let input = &head[l];
            let out = &mut tail[0];
            for (j, o) in out.iter_mut().enumerate() {
                let row = &w[j * n_in..(j + 1) * n_in];
                let z = b[j] + row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>();
                *o = if l < last { z.max(0.0) } else { z };
            }
        }
    }

    /// Output logits (pre-softmax).
    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut s = self.scratch();
        self.run(x, &mut s);
        let out = s.acts.pop().unwrap();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network output"));
        }
        Ok(out)
    }

    /// Class probabilities.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(x)?))
    }

    /// Most probable class; the lowest index wins ties.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.logits(x)?))
    }

    pub fn predict_all(&self, data: &[Sample]) -> Result<Vec<usize>> {
        data.iter().map(|s| self.predict(&s.x)).collect()
    }

    fn check_batch(&self, batch: &[Sample]) -> Result<()> {
        if batch.is_empty() {
            return Err(Error::Empty("batch"));
        }
        let m = self.n_classes();
        for s in batch {
            if s.label as usize >= m {
                return Err(Error::LabelOutOfRange {
                    label: s.label as usize,
                    classes: m,
                });
            }
            self.check_input(&s.x)?;
        }
        Ok(())
    }

    /// Mean cross-entropy over `batch` plus `l1 · Σ|W|`.
    pub fn loss(&self, batch: &[Sample], l1: f64) -> Result<f64> {
        self.check_batch(batch)?;
        let mut s = self.scratch();
        let mut total = 0.0;
        for sample in batch {
            total += self.sample_loss(sample, &mut s);
        }
        Ok(total / batch.len() as f64 + l1 * self.l1_norm())
    }

    fn sample_loss(&self, sample: &Sample, s: &mut Scratch) -> f64 {
        self.run(&sample.x, s);
        let p = softmax(s.acts.last().unwrap());
        cross_entropy(p[sample.label as usize])
    }

    /// Gradient of [`MlpModel::loss`] with respect to the flat parameters.
    pub fn grad(&self, batch: &[Sample], l1: f64) -> Result<Vec<f64>> {
        self.check_batch(batch)?;
        let mut g = vec![0.0; self.params.len()];
        let mut s = self.scratch();
        let scale = 1.0 / batch.len() as f64;
        for sample in batch {
            self.backprop(sample, scale, &mut g, &mut s);
        }
        if l1 != 0.0 {
            for ((gi, pi), is_w) in g.iter_mut().zip(&self.params).zip(self.weight_mask()) {
                if is_w {
                    // sign(0) = 0
                    *gi += l1
                        * if *pi > 0.0 {
                            1.0
                        } else if *pi < 0.0 {
                            -1.0
                        } else {
                            0.0
                        };
                }
            }
        }
        Ok(g)
    }

    /// Accumulates `scale · ∂(−ln p_label)/∂θ` into `g`; returns the sample loss.
    fn backprop(&self, sample: &Sample, scale: f64, g: &mut [f64], s: &mut Scratch) -> f64 {
        self.run(&sample.x, s);
        let label = sample.label as usize;
        let p = softmax(s.acts.last().unwrap());
        let loss = cross_entropy(p[label]);
        if !(p[label] >= PROB_CLAMP) {
            // the clamp is flat here
            return loss;
        }
        s.delta.clear();
        s.delta.extend(
            p.iter()
                .enumerate()
                .map(|(k, &pk)| scale * (pk - if k == label { 1.0 } else { 0.0 })),
        );
        for l in (0..self.sizes.len() - 1).rev() {
            let (w_off, b_off) = self.offsets(l);
            let n_in = self.sizes[l];
            let input = &s.acts[l];
            for (j, &d) in s.delta.iter().enumerate() {
                g[b_off + j] += d;
                if d != 0.0 {
                    let row = &mut g[w_off + j * n_in..w_off + (j + 1) * n_in];
                    for (gw, a) in row.iter_mut().zip(input) {
                        *gw += d * a;
                    }
                }
            }
            if l == 0 {
                break;
            }
            let w = &self.params[w_off..b_off];
            s.delta_prev.clear();
            s.delta_prev.resize(n_in, 0.0);
            for (j, &d) in s.delta.iter().enumerate() {
                if d != 0.0 {
                    let row = &w[j * n_in..(j + 1) * n_in];
                    for (dp, wv) in s.delta_prev.iter_mut().zip(row) {
                        *dp += d * wv;
                    }
                }
            }
            // ReLU derivative, 0 at the kink
            for (dp, a) in s.delta_prev.iter_mut().zip(input) {
                if *a <= 0.0 {
                    *dp = 0.0;
                }
            }
            std::mem::swap(&mut s.delta, &mut s.delta_prev);
        }
        loss
    }

    /// `(mean cross-entropy + L1 term, accuracy)` over `data`.
    pub fn evaluate(&self, data: &[Sample], l1: f64) -> Result<(f64, f64)> {
        self.check_batch(data)?;
        let mut s = self.scratch();
        let mut total = 0.0;
        let mut correct = 0usize;
        for sample in data {
            total += self.sample_loss(sample, &mut s);
            if argmax(s.acts.last().unwrap()) == sample.label as usize {
                correct += 1;
            }
        }
        let n = data.len() as f64;
        Ok((total / n + l1 * self.l1_norm(), correct as f64 / n))
    }
}

/// `−ln p` with `p` clamped from below; NaN passes through.
fn cross_entropy(p: f64) -> f64 {
    if p.is_nan() {
        f64::NAN
    } else {
        -p.max(PROB_CLAMP).ln()
    }
}

/// Softmax with max subtraction. Components are floored at the smallest
/// normal double so they stay strictly positive for any finite logits.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for o in &mut out {
        let q = *o / sum;
        // NaN from non-finite logits must survive the floor
        *o = if q.is_nan() {
            q
        } else {
            q.max(f64::MIN_POSITIVE)
        };
    }
    out
}

/// Index of the first maximum.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping; 0 disables
    /// early stopping.
    pub patience: usize,
    pub learning_rate: f64,
    pub l1_coeff: f64,
    pub optimizer: Optimizer,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 300,
            max_epochs: 100,
            patience: 1,
            learning_rate: 1e-3,
            l1_coeff: 0.0,
            optimizer: Optimizer::Adam,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("batch_size", "must be at least 1"));
        }
        if self.max_epochs == 0 {
            return Err(Error::config("max_epochs", "must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(
                "learning_rate",
                "must be positive and finite",
            ));
        }
        if !(self.l1_coeff >= 0.0 && self.l1_coeff.is_finite()) {
            return Err(Error::config("l1_coeff", "must be non-negative and finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    /// Last epoch run (1-based).
    pub stopped_epoch: usize,
    /// Epoch whose parameters were kept.
    pub best_epoch: usize,
    pub best_val_loss: f64,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

enum Stepper {
    Sgd {
        lr: f64,
    },
    Adam {
        lr: f64,
        m: Vec<f64>,
        v: Vec<f64>,
        t: i32,
    },
}

impl Stepper {
    fn new(cfg: &TrainConfig, n: usize) -> Self {
        match cfg.optimizer {
            Optimizer::Sgd => Stepper::Sgd {
                lr: cfg.learning_rate,
            },
            Optimizer::Adam => Stepper::Adam {
                lr: cfg.learning_rate,
                m: vec![0.0; n],
                v: vec![0.0; n],
                t: 0,
            },
        }
    }

    fn step(&mut self, params: &mut [f64], g: &[f64]) {
        match self {
            Stepper::Sgd { lr } => {
                for (p, gi) in params.iter_mut().zip(g) {
                    *p -= *lr * gi;
                }
            }
            Stepper::Adam { lr, m, v, t } => {
                *t += 1;
                let c1 = 1.0 - ADAM_BETA1.powi(*t);
                let c2 = 1.0 - ADAM_BETA2.powi(*t);
                for i in 0..params.len() {
                    m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
                    v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
                    params[i] -= *lr * (m[i] / c1) / ((v[i] / c2).sqrt() + ADAM_EPS);
                }
            }
        }
    }
}

/// Mini-batch training from `model`'s current parameters. Returns the
/// parameters of the epoch with the lowest validation loss.
pub fn train(
    model: &MlpModel,
    train_set: &[Sample],
    val_set: &[Sample],
    cfg: &TrainConfig,
) -> Result<(MlpModel, TrainReport)> {
    cfg.validate()?;
    model.check_batch(train_set)?;
    model.check_batch(val_set)?;

    let mut current = model.clone();
    let mut best = model.clone();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut stale = 0usize;
    let mut epochs = Vec::new();
    let mut stepper = Stepper::new(cfg, current.params.len());
    let mask = current.weight_mask();
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut g = vec![0.0; current.params.len()];
    let mut s = current.scratch();

    for epoch in 1..=cfg.max_epochs {
        let mut rng = substream(cfg.seed, &[epoch as u64]);
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            g.iter_mut().for_each(|v| *v = 0.0);
            let scale = 1.0 / chunk.len() as f64;
            let mut batch_loss = 0.0;
            for &i in chunk {
                batch_loss += current.backprop(&train_set[i], scale, &mut g, &mut s);
            }
            if !batch_loss.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    loss: batch_loss,
                });
            }
            if cfg.l1_coeff != 0.0 {
                for ((gi, pi), &is_w) in g.iter_mut().zip(&current.params).zip(&mask) {
                    if is_w && *pi != 0.0 {
                        *gi += cfg.l1_coeff * pi.signum();
                    }
                }
            }
            stepper.step(&mut current.params, &g);
        }
        if current.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Divergence {
                epoch,
                loss: f64::NAN,
            });
        }
        let (train_loss, train_accuracy) = current.evaluate(train_set, cfg.l1_coeff)?;
        let (val_loss, val_accuracy) = current.evaluate(val_set, cfg.l1_coeff)?;
        if !(train_loss.is_finite() && val_loss.is_finite()) {
            return Err(Error::Divergence {
                epoch,
                loss: if train_loss.is_finite() {
                    val_loss
                } else {
                    train_loss
                },
            });
        }
        epochs.push(EpochStats {
            epoch,
            train_loss,
            train_accuracy,
            val_loss,
            val_accuracy,
        });
        if val_loss < best_val {
            best_val = val_loss;
            best_epoch = epoch;
            best.params.copy_from_slice(&current.params);
            stale = 0;
        } else {
            stale += 1;
            if cfg.patience > 0 && stale >= cfg.patience {
                break;
            }
        }
    }
    let stopped_epoch = epochs.len();
    Ok((
        best,
        TrainReport {
            epochs,
            stopped_epoch,
            best_epoch,
            best_val_loss: best_val,
        },
    ))
}

pub const MODEL_MAGIC: &[u8; 4] = b"DPHM";
pub const MODEL_FORMAT_VERSION: u8 = 1;

/// JSON header of a model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelHeader {
    pub layer_sizes: Vec<usize>,
    pub arch: Option<Arch>,
    pub class_values: Vec<f64>,
    pub class_names: Vec<String>,
    pub train_config: Option<TrainConfig>,
    pub param_count: usize,
    pub crc32: u32,
}

/// A trained model plus the metadata needed to evaluate it later.
#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub model: MlpModel,
    pub arch: Option<Arch>,
    pub class_values: Vec<f64>,
    pub class_names: Vec<String>,
    pub train_config: Option<TrainConfig>,
}

impl SavedModel {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut payload = Vec::with_capacity(self.model.params.len() * 8);
        for p in &self.model.params {
            payload.extend_from_slice(&p.to_le_bytes());
        }
        let header = ModelHeader {
            layer_sizes: self.model.sizes.clone(),
            arch: self.arch,
            class_values: self.class_values.clone(),
            class_names: self.class_names.clone(),
            train_config: self.train_config.clone(),
            param_count: self.model.params.len(),
            crc32: crc32fast::hash(&payload),
        };
        let json = serde_json::to_vec(&header)?;
        let mut out = Vec::with_capacity(9 + json.len() + payload.len());
        out.extend_from_slice(MODEL_MAGIC);
        out.push(MODEL_FORMAT_VERSION);
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&json);
        out.extend_from_slice(&payload);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 9 {
            return Err(Error::TruncatedFile {
                expected: 9,
                found: bytes.len(),
            });
        }
        if &bytes[..4] != MODEL_MAGIC {
            return Err(Error::MalformedHeader("bad model magic".into()));
        }
        if bytes[4] != MODEL_FORMAT_VERSION {
            return Err(Error::MalformedHeader(format!(
                "unsupported model version {}",
                bytes[4]
            )));
        }
        let len = u32::from_le_bytes(bytes[5..9].try_into().expect("4 bytes")) as usize;
        if bytes.len() < 9 + len {
            return Err(Error::TruncatedFile {
                expected: 9 + len,
                found: bytes.len(),
            });
        }
        let header: ModelHeader = serde_json::from_slice(&bytes[9..9 + len])
            .map_err(|e| Error::MalformedHeader(e.to_string()))?;
        let payload = &bytes[9 + len..];
        if payload.len() != header.param_count * 8 {
            return Err(Error::TruncatedFile {
                expected: 9 + len + header.param_count * 8,
                found: bytes.len(),
            });
        }
        let found = crc32fast::hash(payload);
        if found != header.crc32 {
            return Err(Error::ChecksumMismatch {
                expected: header.crc32,
                found,
            });
        }
        let params = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let model = MlpModel::from_params(&header.layer_sizes, params)
            .map_err(|e| Error::MalformedHeader(e.to_string()))?;
        if header.class_names.len() != model.n_classes() {
            return Err(Error::MalformedHeader(format!(
                "{} class names for {} outputs",
                header.class_names.len(),
                model.n_classes()
            )));
        }
        Ok(SavedModel {
            model,
            arch: header.arch,
            class_values: header.class_values,
            class_names: header.class_names,
            train_config: header.train_config,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        SavedModel::from_bytes(&fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample(x: [f64; 8], label: u16) -> Sample {
        Sample {
            x,
            label,
            provenance: None,
        }
    }

    fn random_batch(n: usize, m: u16, seed: u64) -> Vec<Sample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let mut x = [0.0; 8];
                for v in &mut x {
                    *v = rng.gen_range(0.0..0.5);
                }
                sample(x, rng.gen_range(0..m))
            })
            .collect()
    }

    #[test]
    fn shapes_of_the_three_architectures() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let lp = init_mlp(&Arch::Lp.layer_sizes(16), &mut rng).unwrap();
        assert_eq!(lp.layer(0).0.len(), 16 * 8);
        assert_eq!(lp.params().len(), 16 * 9);
        let nn1 = init_mlp(&Arch::Nn1.layer_sizes(16), &mut rng).unwrap();
        assert_eq!(nn1.params().len(), 5 * 9 + 16 * 6);
        let nn5 = init_mlp(&Arch::Nn5.layer_sizes(16), &mut rng).unwrap();
        assert_eq!(nn5.params().len(), 30 * 9 + 4 * 30 * 31 + 16 * 31);
        assert!(init_mlp(&[8], &mut rng).is_err());
        assert!(init_mlp(&[7, 16], &mut rng).is_err());
        assert!(init_mlp(&[8, 0, 16], &mut rng).is_err());
    }

    #[test]
    fn init_is_bounded_and_seeded() {
        let sizes = Arch::Nn5.layer_sizes(16);
        let a = init_mlp(&sizes, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = init_mlp(&sizes, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        for l in 0..sizes.len() - 1 {
            let (w, bias) = a.layer(l);
            let bound = 1.0 / (sizes[l] as f64).sqrt();
            assert!(w.iter().all(|v| v.abs() < bound));
            assert!(bias.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn zero_model_is_uniform_and_predicts_zero() {
        let m = MlpModel::zeros(&[8, 5, 16]).unwrap();
        let p = m.forward(&[0.3; 8]).unwrap();
        assert!(p.iter().all(|&v| (v - 1.0 / 16.0).abs() < 1e-15));
        assert_eq!(m.predict(&[0.3; 8]).unwrap(), 0);
        let l = m.loss(&random_batch(10, 16, 0), 0.0).unwrap();
        assert!((l - 16f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn softmax_is_safe_for_large_logits() {
        for logits in [
            vec![1e3, -1e3, 0.0, 5.0],
            vec![-1e3, -1e3 + 1.0, -999.5, -1e3],
            vec![1e3, 1e3, 1e3, 1e3],
        ] {
            let p = softmax(&logits);
            assert!(p.iter().all(|&v| v > 0.0));
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let y = [0.1, -2.0, 3.5, 0.7];
        let shifted: Vec<f64> = y.iter().map(|v| v + 250.0).collect();
        for (a, b) in softmax(&y).iter().zip(softmax(&shifted)) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn lp_follows_a_hand_built_linear_rule() {
        // class 1 iff x0 - x1 > 0.1
        let mut params = vec![0.0; 18];
        params[8] = 1.0;
        params[9] = -1.0;
        params[17] = -0.1;
        let m = MlpModel::from_params(&[8, 2], params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let mut x = [0.0f64; 8];
            for v in &mut x {
                *v = rng.gen_range(-1.0..1.0);
            }
            let score = x[0] - x[1] - 0.1;
            if score.abs() > 1e-12 {
                assert_eq!(m.predict(&x).unwrap(), usize::from(score > 0.0));
            }
        }
    }

    #[test]
    fn predict_ignores_output_shift_and_breaks_ties_low() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut m = init_mlp(&[8, 5, 6], &mut rng).unwrap();
        let x = [0.2, 0.1, 0.4, 0.3, 0.25, 0.25, 0.1, 0.4];
        let before = m.predict(&x).unwrap();
        let (_, b_off) = m.offsets(1);
        for b in &mut m.params_mut()[b_off..b_off + 6] {
            *b += 3.0;
        }
        assert_eq!(m.predict(&x).unwrap(), before);
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), 1);
        // one-hot forcing bias
        let mut z = MlpModel::zeros(&[8, 4]).unwrap();
        z.params_mut()[32 + 2] = 5.0;
        assert_eq!(z.predict(&x).unwrap(), 2);
    }

    #[test]
    fn loss_terms() {
        let mut m = MlpModel::zeros(&[8, 2]).unwrap();
        // one-hot-ish prediction of class 1
        m.params_mut()[17] = 25.0;
        let batch = vec![sample([0.0; 8], 1)];
        assert!(m.loss(&batch, 0.0).unwrap() < 1e-10);
        let bad = vec![sample([0.0; 8], 0)];
        assert!((m.loss(&bad, 0.0).unwrap() - 25.0).abs() < 1e-9);
        // clamp bounds the loss
        m.params_mut()[17] = 1e3;
        assert!((m.loss(&bad, 0.0).unwrap() + PROB_CLAMP.ln()).abs() < 1e-9);
        // L1: weights summing to 10 in absolute value, coefficient 0.01
        let mut w = MlpModel::zeros(&[8, 2]).unwrap();
        for (i, p) in w.params_mut()[..16].iter_mut().enumerate() {
            *p = if i % 2 == 0 { 0.625 } else { -0.625 };
        }
        let base = w.loss(&batch, 0.0).unwrap();
        assert!((w.loss(&batch, 0.01).unwrap() - base - 0.1).abs() < 1e-12);
        assert!(matches!(
            w.loss(&[sample([0.0; 8], 2)], 0.0),
            Err(Error::LabelOutOfRange { .. })
        ));
        assert!(matches!(w.loss(&[], 0.0), Err(Error::Empty(_))));
    }

    fn max_fd_error(m: &MlpModel, batch: &[Sample], l1: f64) -> f64 {
        let g = m.grad(batch, l1).unwrap();
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for i in 0..m.params().len() {
            let mut plus = m.clone();
            plus.params_mut()[i] += h;
            let mut minus = m.clone();
            minus.params_mut()[i] -= h;
            let fd = (plus.loss(batch, l1).unwrap() - minus.loss(batch, l1).unwrap()) / (2.0 * h);
            let rel = (g[i] - fd).abs() / g[i].abs().max(fd.abs()).max(1e-6);
            worst = worst.max(rel);
        }
        worst
    }

    #[test]
    fn gradients_match_finite_differences() {
        let batch = random_batch(64, 16, 11);
        for (k, arch) in Arch::ALL.iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(20 + k as u64);
            let mut m = init_mlp(&arch.layer_sizes(16), &mut rng).unwrap();
            // nonzero biases so every path is exercised
            let n = m.params().len();
            for p in &mut m.params_mut()[..n] {
                *p += rng.gen_range(-0.05..0.05);
            }
            let err = max_fd_error(&m, &batch, 0.0);
            assert!(err <= 1e-4, "{arch:?}: {err}");
            let err = max_fd_error(&m, &batch, 0.003);
            assert!(err <= 1e-4, "{arch:?} with L1: {err}");
        }
    }

    #[test]
    fn gradient_is_mean_over_sub_batches() {
        let batch = random_batch(50, 16, 3);
        let m = init_mlp(&[8, 5, 16], &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let all = m.grad(&batch, 0.0).unwrap();
        let a = m.grad(&batch[..20], 0.0).unwrap();
        let b = m.grad(&batch[20..], 0.0).unwrap();
        for i in 0..all.len() {
            assert!((all[i] - (0.4 * a[i] + 0.6 * b[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn dead_input_only_feeds_bias_paths() {
        // zero input, zero biases: every hidden unit is exactly 0, so only
        // output biases and first-layer biases (through the kink, which has
        // derivative 0) can move; all weight gradients vanish
        let mut m = init_mlp(&[8, 5, 5, 4], &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let n = m.params().len();
        let mask = m.weight_mask();
        for (p, w) in m.params_mut()[..n].iter_mut().zip(&mask) {
            if !w {
                *p = 0.0;
            }
        }
        let g = m.grad(&[sample([0.0; 8], 1)], 0.0).unwrap();
        for (gi, w) in g.iter().zip(&mask) {
            if *w {
                assert_eq!(*gi, 0.0);
            }
        }
        let (_, b_off) = m.offsets(2);
        assert!(g[b_off..b_off + 4].iter().any(|v| *v != 0.0));
    }

    fn separable(n: usize, seed: u64) -> Vec<Sample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let label = (i % 2) as u16;
                let mut x = [0.0; 8];
                for v in &mut x {
                    *v = rng.gen_range(0.0..1.0);
                }
                // x0 + x1 = 1 ± 0.2
                let shift = if label == 1 { 0.2 } else { -0.2 };
                x[1] = 1.0 - x[0] + shift;
                sample(x, label)
            })
            .collect()
    }

    #[test]
    fn lp_separates_a_separable_set() {
        let train_set = separable(400, 1);
        let val_set = separable(100, 2);
        let m = init_mlp(&[8, 2], &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let cfg = TrainConfig {
            batch_size: 20,
            max_epochs: 300,
            patience: 0,
            learning_rate: 0.01,
            ..TrainConfig::default()
        };
        let (trained, report) = train(&m, &train_set, &val_set, &cfg).unwrap();
        let (_, acc) = trained.evaluate(&train_set, 0.0).unwrap();
        assert_eq!(acc, 1.0);
        assert_eq!(report.stopped_epoch, 300);
    }

    #[test]
    fn training_is_deterministic() {
        let train_set = random_batch(300, 4, 7);
        let val_set = random_batch(60, 4, 8);
        let m = init_mlp(&[8, 5, 4], &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let cfg = TrainConfig {
            batch_size: 32,
            max_epochs: 5,
            patience: 0,
            ..TrainConfig::default()
        };
        let a = train(&m, &train_set, &val_set, &cfg).unwrap();
        let b = train(&m, &train_set, &val_set, &cfg).unwrap();
        assert_eq!(a, b);
        let c = train(&m, &train_set, &val_set, &TrainConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn early_stopping_keeps_the_best_epoch() {
        // validation labels contradict the training labels, so validation
        // loss rises from the first epoch on
        let train_set = separable(200, 3);
        let val_set: Vec<Sample> = separable(50, 4)
            .into_iter()
            .map(|s| sample(s.x, 1 - s.label))
            .collect();
        let m = init_mlp(&[8, 2], &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let cfg = TrainConfig {
            batch_size: 10,
            max_epochs: 50,
            patience: 1,
            learning_rate: 0.05,
            ..TrainConfig::default()
        };
        let (best, report) = train(&m, &train_set, &val_set, &cfg).unwrap();
        assert_eq!(report.best_epoch, 1);
        assert_eq!(report.stopped_epoch, 2);
        assert!(report.epochs[1].val_loss >= report.epochs[0].val_loss);
        let (val_loss, _) = best.evaluate(&val_set, 0.0).unwrap();
        assert_eq!(val_loss, report.epochs[0].val_loss);

        let cfg3 = TrainConfig { patience: 3, ..cfg };
        let (_, report) = train(&m, &train_set, &val_set, &cfg3).unwrap();
        assert_eq!(report.stopped_epoch, report.best_epoch + 3);
        assert!(report.stopped_epoch <= cfg3.max_epochs);
    }

    #[test]
    fn divergence_is_reported() {
        // finite inputs whose logits overflow
        let train_set = vec![sample([1e308; 8], 0), sample([1e308; 8], 1)];
        let m = MlpModel::from_params(&[8, 2], vec![0.3; 18]).unwrap();
        let cfg = TrainConfig {
            patience: 0,
            max_epochs: 3,
            ..TrainConfig::default()
        };
        let r = train(&m, &train_set, &train_set, &cfg);
        assert!(
            matches!(r, Err(Error::Divergence { epoch: 1, .. })),
            "{r:?}"
        );
    }

    #[test]
    fn model_file_round_trip() {
        let m = init_mlp(&[8, 5, 3], &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
        let saved = SavedModel {
            model: m,
            arch: None,
            class_values: vec![0.5, 1.0, 1.5],
            class_names: vec!["a".into(), "b".into(), "c".into()],
            train_config: Some(TrainConfig::default()),
        };
        let bytes = saved.to_bytes().unwrap();
        assert_eq!(SavedModel::from_bytes(&bytes).unwrap(), saved);
        let mut bad = bytes.clone();
        let n = bad.len();
        bad[n - 1] ^= 1;
        assert!(matches!(
            SavedModel::from_bytes(&bad),
            Err(Error::ChecksumMismatch { .. })
        ));
        assert!(matches!(
            SavedModel::from_bytes(&bytes[..n - 4]),
            Err(Error::TruncatedFile { .. })
        ));
    }
}
