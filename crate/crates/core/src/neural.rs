//! Fully-connected softmax classifier, trained from scratch with Adam.
//!
//! The network is deliberately small and explicit: ReLU hidden layers, a
//! softmax head trained on mean cross-entropy, numerically stable
//! log-softmax, and hand-written backprop. Two entry modes share one
//! [`train`] loop — fresh training initializes a fixed `[d, 256, 256, Q]`
//! architecture, while fine-tuning resumes from caller-supplied parameters
//! with its own (usually gentler) hyperparameters and a fresh optimizer
//! state.
//!
//! All floating-point accumulation orders are fixed, so identical inputs and
//! seeds reproduce identical parameters bit for bit.

use ndarray::{Array1, Array2, ArrayView2, Axis, Dimension, Zip};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{FeatureMode, NormStats};
use crate::error::{Error, Result};
use crate::seeding::derive_seed;

/// Hidden widths of the standard architecture.
pub const HIDDEN_DIMS: [usize; 2] = [256, 256];

/// Adam moment decay rates and divide-safety epsilon.
pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

/// Weights and biases of the MLP. `weights[l]` has shape
/// `(layer_dims[l], layer_dims[l+1])`; `biases[l]` matches the output side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub layer_dims: Vec<usize>,
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl MlpParams {
    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().expect("params have at least 2 dims")
    }

    fn num_affine(&self) -> usize {
        self.layer_dims.len() - 1
    }

    fn validate(&self) -> Result<()> {
        if self.layer_dims.len() < 2 {
            return Err(Error::invalid(
                "layer_dims",
                "network needs at least input and output layers",
            ));
        }
        if self.layer_dims.iter().any(|&d| d == 0) {
            return Err(Error::invalid("layer_dims", "layer widths must be positive"));
        }
        if self.weights.len() != self.num_affine() || self.biases.len() != self.num_affine() {
            return Err(Error::invalid(
                "weights",
                "parameter blocks do not match layer_dims",
            ));
        }
        for l in 0..self.num_affine() {
            let expect = (self.layer_dims[l], self.layer_dims[l + 1]);
            if self.weights[l].dim() != expect {
                return Err(Error::invalid(
                    format!("weights[{l}]"),
                    format!("expected shape {expect:?}, found {:?}", self.weights[l].dim()),
                ));
            }
            if self.biases[l].len() != self.layer_dims[l + 1] {
                return Err(Error::invalid(
                    format!("biases[{l}]"),
                    format!(
                        "expected length {}, found {}",
                        self.layer_dims[l + 1],
                        self.biases[l].len()
                    ),
                ));
            }
        }
        Ok(())
    }
}

/// Per-parameter gradients, in the same block layout as [`MlpParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// Uniform He-style initialization: weights from U(-sqrt(6/fan_in),
/// +sqrt(6/fan_in)) drawn row-major per layer, biases zero. Deterministic in
/// `seed`.
pub fn init_params(seed: u64, layer_dims: &[usize]) -> Result<MlpParams> {
    let probe = MlpParams {
        layer_dims: layer_dims.to_vec(),
        weights: Vec::new(),
        biases: Vec::new(),
    };
    if layer_dims.len() < 2 || layer_dims.iter().any(|&d| d == 0) {
        probe.validate()?; // produces the right error message
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = Vec::with_capacity(layer_dims.len() - 1);
    let mut biases = Vec::with_capacity(layer_dims.len() - 1);
    for l in 0..layer_dims.len() - 1 {
        let (fan_in, fan_out) = (layer_dims[l], layer_dims[l + 1]);
        let limit = (6.0 / fan_in as f64).sqrt();
        let mut flat = Vec::with_capacity(fan_in * fan_out);
        for _ in 0..fan_in * fan_out {
            flat.push(rng.random_range(-limit..limit));
        }
        weights.push(
            Array2::from_shape_vec((fan_in, fan_out), flat)
                .expect("shape matches the buffer just built"),
        );
        biases.push(Array1::zeros(fan_out));
    }
    Ok(MlpParams {
        layer_dims: layer_dims.to_vec(),
        weights,
        biases,
    })
}

struct ForwardCache {
    /// `activations[0]` is the input batch; `activations[l]` for l >= 1 is
    /// the post-ReLU output of hidden layer l.
    activations: Vec<Array2<f64>>,
    log_probs: Array2<f64>,
    probs: Array2<f64>,
}

fn forward_cached(params: &MlpParams, x: &ArrayView2<f64>) -> ForwardCache {
    let last = params.num_affine() - 1;
    let mut activations = Vec::with_capacity(params.num_affine());
    activations.push(x.to_owned());
    for l in 0..last {
        let z = activations[l].dot(&params.weights[l]) + &params.biases[l];
        activations.push(z.mapv(|v| v.max(0.0)));
    }
    let logits = activations[last].dot(&params.weights[last]) + &params.biases[last];
    let (log_probs, probs) = row_log_softmax(logits);
    ForwardCache {
        activations,
        log_probs,
        probs,
    }
}

/// Stable row-wise log-softmax: subtract the row max before exponentiating.
fn row_log_softmax(logits: Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    let mut log_probs = logits;
    for mut row in log_probs.outer_iter_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        row.mapv_inplace(|v| v - max - lse);
    }
    let probs = log_probs.mapv(f64::exp);
    (log_probs, probs)
}

fn check_batch(params: &MlpParams, x: &ArrayView2<f64>, labels: &[usize]) -> Result<()> {
    params.validate()?;
    if x.nrows() == 0 {
        return Err(Error::EmptyDataset);
    }
    if x.ncols() != params.input_dim() {
        return Err(Error::dimension_mismatch(
            "features vs input layer",
            params.input_dim(),
            x.ncols(),
        ));
    }
    if labels.len() != x.nrows() {
        return Err(Error::dimension_mismatch(
            "labels vs batch",
            x.nrows(),
            labels.len(),
        ));
    }
    let classes = params.output_dim();
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::invalid(
            "labels",
            format!("label {bad} out of range for {classes} classes"),
        ));
    }
    Ok(())
}

/// Class probabilities for a single feature vector.
pub fn forward(params: &MlpParams, features: &[f64]) -> Result<Vec<f64>> {
    params.validate()?;
    if features.len() != params.input_dim() {
        return Err(Error::dimension_mismatch(
            "features vs input layer",
            params.input_dim(),
            features.len(),
        ));
    }
    let x = Array2::from_shape_vec((1, features.len()), features.to_vec())
        .expect("shape matches the slice");
    let cache = forward_cached(params, &x.view());
    Ok(cache.probs.row(0).to_vec())
}

/// Mean cross-entropy over the batch and its exact gradient by backprop.
pub fn loss_and_gradient(
    params: &MlpParams,
    x: ArrayView2<f64>,
    labels: &[usize],
) -> Result<(f64, Gradients)> {
    check_batch(params, &x, labels)?;
    let batch = x.nrows() as f64;
    let cache = forward_cached(params, &x);

    let loss = -labels
        .iter()
        .enumerate()
        .map(|(i, &l)| cache.log_probs[(i, l)])
        .sum::<f64>()
        / batch;

    // dL/dlogits = (probs - onehot) / batch.
    let mut delta = cache.probs.clone();
    for (i, &l) in labels.iter().enumerate() {
        delta[(i, l)] -= 1.0;
    }
    delta /= batch;

    let last = params.num_affine() - 1;
    let mut weights = vec![Array2::zeros((0, 0)); params.num_affine()];
    let mut biases = vec![Array1::zeros(0); params.num_affine()];
    for l in (0..=last).rev() {
        weights[l] = cache.activations[l].t().dot(&delta);
        biases[l] = delta.sum_axis(Axis(0));
        if l > 0 {
            // Push the error through the affine map, then gate by the ReLU
            // sub-gradient (0 at exactly 0).
            let mut upstream = delta.dot(&params.weights[l].t());
            Zip::from(&mut upstream)
                .and(&cache.activations[l])
                .for_each(|u, &a| {
                    if a <= 0.0 {
                        *u = 0.0;
                    }
                });
            delta = upstream;
        }
    }
    Ok((loss, Gradients { weights, biases }))
}

/// Adam first/second moment accumulators plus the step counter.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub step: u64,
    m_weights: Vec<Array2<f64>>,
    v_weights: Vec<Array2<f64>>,
    m_biases: Vec<Array1<f64>>,
    v_biases: Vec<Array1<f64>>,
}

impl AdamState {
    /// Zeroed state shaped like `params`.
    pub fn new(params: &MlpParams) -> Self {
        AdamState {
            step: 0,
            m_weights: params.weights.iter().map(|w| Array2::zeros(w.dim())).collect(),
            v_weights: params.weights.iter().map(|w| Array2::zeros(w.dim())).collect(),
            m_biases: params.biases.iter().map(|b| Array1::zeros(b.len())).collect(),
            v_biases: params.biases.iter().map(|b| Array1::zeros(b.len())).collect(),
        }
    }
}

fn adam_update_block<D: Dimension>(
    theta: &mut ndarray::Array<f64, D>,
    grad: &ndarray::Array<f64, D>,
    m: &mut ndarray::Array<f64, D>,
    v: &mut ndarray::Array<f64, D>,
    lr: f64,
    bias_correction1: f64,
    bias_correction2: f64,
) {
    Zip::from(theta)
        .and(grad)
        .and(m)
        .and(v)
        .for_each(|t, &g, m, v| {
            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
            let m_hat = *m / bias_correction1;
            let v_hat = *v / bias_correction2;
            *t -= lr * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
        });
}

/// One bias-corrected Adam update of every parameter block, in place.
pub fn adam_step(
    params: &mut MlpParams,
    grads: &Gradients,
    state: &mut AdamState,
    learning_rate: f64,
) -> Result<()> {
    if !(learning_rate >= 0.0) || !learning_rate.is_finite() {
        return Err(Error::invalid(
            "learning_rate",
            "must be finite and non-negative",
        ));
    }
    if grads.weights.len() != params.weights.len() || grads.biases.len() != params.biases.len() {
        return Err(Error::dimension_mismatch(
            "gradient blocks vs params",
            params.weights.len(),
            grads.weights.len(),
        ));
    }
    for l in 0..params.weights.len() {
        if grads.weights[l].dim() != params.weights[l].dim()
            || grads.biases[l].len() != params.biases[l].len()
        {
            return Err(Error::invalid(
                format!("gradients[{l}]"),
                "gradient shape does not match parameters",
            ));
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - ADAM_BETA1.powi(t);
    let bc2 = 1.0 - ADAM_BETA2.powi(t);
    for l in 0..params.weights.len() {
        adam_update_block(
            &mut params.weights[l],
            &grads.weights[l],
            &mut state.m_weights[l],
            &mut state.v_weights[l],
            learning_rate,
            bc1,
            bc2,
        );
        adam_update_block(
            &mut params.biases[l],
            &grads.biases[l],
            &mut state.m_biases[l],
            &mut state.v_biases[l],
            learning_rate,
            bc1,
            bc2,
        );
    }
    Ok(())
}

/// Whether [`train`] starts fresh or resumes from given parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainMode {
    /// Initialize a fresh `[d, 256, 256, Q]` network.
    Train,
    /// Resume from caller-supplied parameters (fresh optimizer state).
    Finetune,
}

/// Hyperparameters for one [`train`] call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub rng_seed: u64,
    pub mode: TrainMode,
    /// Multiply the learning rate by 0.2 every 20 epochs. Off by default.
    pub step_decay: bool,
}

impl TrainConfig {
    /// Standard from-scratch recipe: lr 1e-2, 80 epochs, batches of 32.
    pub fn training(rng_seed: u64) -> Self {
        TrainConfig {
            learning_rate: 1e-2,
            epochs: 80,
            batch_size: 32,
            rng_seed,
            mode: TrainMode::Train,
            step_decay: false,
        }
    }

    /// Standard fine-tune recipe: lr 1e-4, 40 epochs, batches of 8.
    pub fn finetuning(rng_seed: u64) -> Self {
        TrainConfig {
            learning_rate: 1e-4,
            epochs: 40,
            batch_size: 8,
            rng_seed,
            mode: TrainMode::Finetune,
            step_decay: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::invalid(
                "learning_rate",
                "must be finite and non-negative",
            ));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size", "must be at least 1"));
        }
        Ok(())
    }
}

/// Runs mini-batch Adam over the data and returns the trained parameters
/// plus the per-epoch mean training loss.
///
/// `initial` must be `None` in [`TrainMode::Train`] (a fresh network is
/// initialized from the config seed) and `Some` in [`TrainMode::Finetune`].
/// Batches are formed from a fresh shuffle each epoch; the effective batch
/// size is capped at the dataset size. Every random choice derives from
/// `cfg.rng_seed`, so a call is bit-reproducible.
pub fn train(
    initial: Option<&MlpParams>,
    features: ArrayView2<f64>,
    labels: &[usize],
    num_classes: usize,
    cfg: &TrainConfig,
) -> Result<(MlpParams, Vec<f64>)> {
    cfg.validate()?;
    if num_classes == 0 {
        return Err(Error::invalid("num_classes", "must be at least 1"));
    }
    let mut params = match (cfg.mode, initial) {
        (TrainMode::Train, None) => {
            let dims = [
                &[features.ncols()][..],
                &HIDDEN_DIMS[..],
                &[num_classes][..],
            ]
            .concat();
            init_params(derive_seed(cfg.rng_seed, 1), &dims)?
        }
        (TrainMode::Finetune, Some(p)) => {
            if p.input_dim() != features.ncols() {
                return Err(Error::dimension_mismatch(
                    "features vs checkpoint input layer",
                    p.input_dim(),
                    features.ncols(),
                ));
            }
            if p.output_dim() != num_classes {
                return Err(Error::dimension_mismatch(
                    "num_classes vs checkpoint output layer",
                    p.output_dim(),
                    num_classes,
                ));
            }
            p.clone()
        }
        (TrainMode::Train, Some(_)) => {
            return Err(Error::invalid(
                "initial",
                "train mode initializes its own parameters; pass None",
            ))
        }
        (TrainMode::Finetune, None) => {
            return Err(Error::invalid(
                "initial",
                "finetune mode requires initial parameters",
            ))
        }
    };
    check_batch(&params, &features, labels)?;

    let n = features.nrows();
    let batch_size = cfg.batch_size.min(n);
    let mut adam = AdamState::new(&params);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.rng_seed, 2));
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let lr = if cfg.step_decay {
            cfg.learning_rate * 0.2f64.powi((epoch / 20) as i32)
        } else {
            cfg.learning_rate
        };
        let mut loss_sum = 0.0;
        for chunk in order.chunks(batch_size) {
            let batch_x = features.select(Axis(0), chunk);
            let batch_labels: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
            let (loss, grads) = loss_and_gradient(&params, batch_x.view(), &batch_labels)?;
            loss_sum += loss * chunk.len() as f64;
            adam_step(&mut params, &grads, &mut adam, lr)?;
        }
        history.push(loss_sum / n as f64);
    }
    Ok((params, history))
}

/// The `k` most probable classes for one feature vector, most probable
/// first; probability ties keep ascending class order. `k` must lie in
/// `1..=Q`.
pub fn predict_topk(params: &MlpParams, features: &[f64], k: usize) -> Result<Vec<usize>> {
    let probs = forward(params, features)?;
    if k == 0 || k > probs.len() {
        return Err(Error::invalid(
            "k",
            format!("k={k} out of range for {} classes", probs.len()),
        ));
    }
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| {
        probs[b]
            .partial_cmp(&probs[a])
            .expect("probabilities are never NaN")
            .then(a.cmp(&b))
    });
    order.truncate(k);
    Ok(order)
}

/// A trained model bundled with everything needed to reproduce its inputs:
/// the normalization statistics and the feature layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub params: MlpParams,
    pub norm_stats: NormStats,
    pub feature_mode: FeatureMode,
}

impl Checkpoint {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(text)?;
        ckpt.params.validate()?;
        Ok(ckpt)
    }
}
