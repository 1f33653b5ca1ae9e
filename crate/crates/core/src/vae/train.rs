use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{one_hot, Architecture, Gradients, VaeError, VaeModel, LATENT_DIM};
use crate::corpus::Corpus;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub decay_every: usize,
    pub decay_factor: f64,
    pub batch_size: usize,
    pub kl_weight: f64,
    pub seed: u64,
    #[serde(default)]
    pub architecture: Architecture,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10_000,
            learning_rate: 1e-3,
            decay_every: 2_500,
            decay_factor: 0.01,
            batch_size: 64,
            kl_weight: 1.0,
            seed: 0,
            architecture: Architecture::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.epochs == 0 {
            return Err("epochs must be positive".into());
        }
        if self.batch_size == 0 || self.decay_every == 0 {
            return Err("batch_size and decay_every must be positive".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err("learning_rate must be positive".into());
        }
        if !(self.decay_factor > 0.0 && self.decay_factor <= 1.0) {
            return Err("decay_factor must be in (0, 1]".into());
        }
        if !(self.kl_weight > 0.0 && self.kl_weight.is_finite()) {
            return Err("kl_weight must be positive".into());
        }
        if self.architecture.hidden.is_empty() || self.architecture.hidden.contains(&0) {
            return Err("hidden layer widths must be positive".into());
        }
        Ok(())
    }

    /// Step-decayed rate for a 0-based epoch.
    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        self.learning_rate * self.decay_factor.powi((epoch / self.decay_every) as i32)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub mean_total: f64,
    pub mean_recon: f64,
    pub mean_kl: f64,
    pub learning_rate: f64,
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Vae(#[from] VaeError),
    #[error("loss diverged in epoch {epoch}")]
    NonFiniteLoss {
        epoch: usize,
        /// Model as of the last completed epoch.
        checkpoint: Box<VaeModel>,
        log: Vec<EpochLog>,
    },
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: VaeModel,
    pub log: Vec<EpochLog>,
}

struct Adam {
    m: Vec<(Array2<f64>, ndarray::Array1<f64>)>,
    v: Vec<(Array2<f64>, ndarray::Array1<f64>)>,
    t: i32,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl Adam {
    fn new(model: &VaeModel) -> Self {
        let zeros: Vec<_> = model
            .layers()
            .iter()
            .map(|l| (Array2::zeros(l.weights.raw_dim()), ndarray::Array1::zeros(l.bias.len())))
            .collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    fn step(&mut self, model: &mut VaeModel, grads: &Gradients, lr: f64) {
        self.t += 1;
        let c1 = 1.0 - BETA1.powi(self.t);
        let c2 = 1.0 - BETA2.powi(self.t);
        for (((layer, g), m), v) in model
            .layers_mut()
            .into_iter()
            .zip(&grads.layers)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            update(layer.weights.as_slice_mut(), g.weights.as_slice(), m.0.as_slice_mut(), v.0.as_slice_mut(), lr, c1, c2);
            update(layer.bias.as_slice_mut(), g.bias.as_slice(), m.1.as_slice_mut(), v.1.as_slice_mut(), lr, c1, c2);
        }
    }
}

fn update(
    p: Option<&mut [f64]>,
    g: Option<&[f64]>,
    m: Option<&mut [f64]>,
    v: Option<&mut [f64]>,
    lr: f64,
    c1: f64,
    c2: f64,
) {
    let (p, g, m, v) = (
        p.expect("contiguous"),
        g.expect("contiguous"),
        m.expect("contiguous"),
        v.expect("contiguous"),
    );
    for i in 0..p.len() {
        m[i] = BETA1 * m[i] + (1.0 - BETA1) * g[i];
        v[i] = BETA2 * v[i] + (1.0 - BETA2) * g[i] * g[i];
        let mh = m[i] / c1;
        let vh = v[i] / c2;
        p[i] -= lr * mh / (vh.sqrt() + ADAM_EPS);
    }
}

/// Trains a fresh model on `corpus`, single-threaded and fully determined by
/// `tc.seed`. The returned weights are rounded to `f32` so the in-memory
/// model equals its serialized form.
pub fn train(corpus: &Corpus, vocab_size: usize, game_tag: &str, tc: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    train_with(corpus, vocab_size, game_tag, tc, |_| {})
}

/// As [`train`], calling `on_epoch` after every epoch.
pub fn train_with(
    corpus: &Corpus,
    vocab_size: usize,
    game_tag: &str,
    tc: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainOutcome, TrainError> {
    tc.validate().map_err(TrainError::InvalidConfig)?;
    if corpus.is_empty() {
        return Err(TrainError::InvalidConfig("corpus is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed);
    let mut model = VaeModel::new(vocab_size, game_tag, &tc.architecture, &mut rng);
    let encoded: Vec<Vec<f64>> = corpus
        .segments
        .iter()
        .map(|s| one_hot(s, vocab_size))
        .collect::<Result<_, _>>()?;
    let input = model.input_size();
    let mut adam = Adam::new(&model);
    let mut order: Vec<usize> = (0..encoded.len()).collect();
    let mut log = Vec::with_capacity(tc.epochs);
    let mut checkpoint = model.clone();
    for epoch in 0..tc.epochs {
        let lr = tc.learning_rate_at(epoch);
        order.shuffle(&mut rng);
        let (mut total, mut recon, mut kl) = (0.0, 0.0, 0.0);
        for batch in order.chunks(tc.batch_size) {
            let b = batch.len();
            let mut x = Array2::zeros((b, input));
            for (row, &i) in batch.iter().enumerate() {
                x.row_mut(row)
                    .as_slice_mut()
                    .expect("contiguous")
                    .copy_from_slice(&encoded[i]);
            }
            let eps = Array2::from_shape_simple_fn((b, LATENT_DIM), || {
                StandardNormal.sample(&mut rng)
            });
            let (parts, grads) = model.loss_and_grad(&x, &eps, tc.kl_weight);
            if !parts.total.is_finite() {
                checkpoint.round_to_f32();
                return Err(TrainError::NonFiniteLoss {
                    epoch,
                    checkpoint: Box::new(checkpoint),
                    log,
                });
            }
            total += parts.total * b as f64;
            recon += parts.recon * b as f64;
            kl += parts.kl * b as f64;
            adam.step(&mut model, &grads, lr);
        }
        let n = encoded.len() as f64;
        let entry = EpochLog {
            epoch: epoch + 1,
            mean_total: total / n,
            mean_recon: recon / n,
            mean_kl: kl / n,
            learning_rate: lr,
        };
        on_epoch(&entry);
        log.push(entry);
        checkpoint.clone_from(&model);
    }
    model.round_to_f32();
    Ok(TrainOutcome { model, log })
}

pub fn write_log_csv(log: &[EpochLog], path: &std::path::Path) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["epoch", "mean_total", "mean_recon", "mean_kl", "learning_rate"])?;
    for e in log {
        w.write_record([
            e.epoch.to_string(),
            e.mean_total.to_string(),
            e.mean_recon.to_string(),
            e.mean_kl.to_string(),
            e.learning_rate.to_string(),
        ])?;
    }
    w.flush()
}
