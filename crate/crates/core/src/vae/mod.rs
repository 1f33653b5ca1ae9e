//! Fully-connected variational autoencoder over one-hot segments.
//!
//! Segments are one-hot encoded position-major, tile-channel-minor. The
//! encoder maps `256·T` inputs through ReLU hidden layers to a mean and a
//! log-variance head, the decoder maps a latent vector back to `256·T`
//! logits, one softmax per tile position.

mod io;
mod train;

pub use io::{model_hash, weight_blob, LayerSpec, ModelIoError, ModelManifest, FORMAT_VERSION, MODEL_BLOB, MODEL_MANIFEST};
pub use train::{train, train_with, write_log_csv, EpochLog, TrainConfig, TrainError, TrainOutcome};

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Segment, TileId, SEGMENT_TILES};

pub const LATENT_DIM: usize = 32;

#[derive(Debug, Error, PartialEq)]
pub enum VaeError {
    #[error("tile {tile} out of range for vocabulary of {vocab}")]
    TileOutOfRange { tile: u8, vocab: usize },
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("non-finite loss")]
    NonFiniteLoss,
    #[error("sample count must be positive")]
    EmptySample,
}

/// A point in the 32-dimensional latent space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatentVector(pub Vec<f64>);

impl LatentVector {
    pub fn new(values: Vec<f64>) -> Result<Self, VaeError> {
        if values.len() != LATENT_DIM {
            return Err(VaeError::ShapeMismatch {
                expected: LATENT_DIM,
                got: values.len(),
            });
        }
        Ok(Self(values))
    }

    pub fn zeros() -> Self {
        Self(vec![0.0; LATENT_DIM])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Identity,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    /// `out × in`, row-major.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Self {
            weights: Array2::zeros((outputs, inputs)),
            bias: Array1::zeros(outputs),
            activation,
        }
    }

    /// Glorot-uniform weights, zero bias.
    pub fn glorot<R: Rng + ?Sized>(
        inputs: usize,
        outputs: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
        let weights = Array2::from_shape_simple_fn((outputs, inputs), || dist.sample(rng));
        Self {
            weights,
            bias: Array1::zeros(outputs),
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }

    /// Pre-activations for a batch (`batch × in` → `batch × out`).
    fn pre(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.weights.t()) + &self.bias
    }

    fn activate(&self, mut z: Array2<f64>) -> Array2<f64> {
        if self.activation == Activation::Relu {
            z.mapv_inplace(|v| v.max(0.0));
        }
        z
    }

    fn forward_one(&self, x: ArrayView1<f64>) -> Array1<f64> {
        let mut z = self.weights.dot(&x) + &self.bias;
        if self.activation == Activation::Relu {
            z.mapv_inplace(|v| v.max(0.0));
        }
        z
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// Hidden-layer widths; the decoder mirrors the encoder.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub hidden: Vec<usize>,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            hidden: vec![512, 256, 128],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VaeModel {
    pub encoder: Vec<DenseLayer>,
    pub mu_head: DenseLayer,
    pub log_var_head: DenseLayer,
    /// Ends in an identity layer producing `256·T` logits.
    pub decoder: Vec<DenseLayer>,
    pub vocab_size: usize,
    pub game_tag: String,
}

impl VaeModel {
    pub fn new<R: Rng + ?Sized>(
        vocab_size: usize,
        game_tag: impl Into<String>,
        arch: &Architecture,
        rng: &mut R,
    ) -> Self {
        Self::build(vocab_size, game_tag, arch, |i, o, a| DenseLayer::glorot(i, o, a, rng))
    }

    /// A model with every weight and bias zero; useful for probing linearity.
    pub fn zeroed(vocab_size: usize, game_tag: impl Into<String>, arch: &Architecture) -> Self {
        Self::build(vocab_size, game_tag, arch, DenseLayer::zeros)
    }

    fn build(
        vocab_size: usize,
        game_tag: impl Into<String>,
        arch: &Architecture,
        mut make: impl FnMut(usize, usize, Activation) -> DenseLayer,
    ) -> Self {
        let input = SEGMENT_TILES * vocab_size;
        let mut encoder = Vec::new();
        let mut prev = input;
        for &h in &arch.hidden {
            encoder.push(make(prev, h, Activation::Relu));
            prev = h;
        }
        let mu_head = make(prev, LATENT_DIM, Activation::Identity);
        let log_var_head = make(prev, LATENT_DIM, Activation::Identity);
        let mut decoder = Vec::new();
        let mut prev = LATENT_DIM;
        for &h in arch.hidden.iter().rev() {
            decoder.push(make(prev, h, Activation::Relu));
            prev = h;
        }
        decoder.push(make(prev, input, Activation::Identity));
        Self {
            encoder,
            mu_head,
            log_var_head,
            decoder,
            vocab_size,
            game_tag: game_tag.into(),
        }
    }

    pub fn input_size(&self) -> usize {
        SEGMENT_TILES * self.vocab_size
    }

    pub fn architecture(&self) -> Architecture {
        Architecture {
            hidden: self.encoder.iter().map(|l| l.outputs()).collect(),
        }
    }

    /// All layers in storage order: encoder, mu head, log-var head, decoder.
    pub fn layers(&self) -> Vec<&DenseLayer> {
        let mut out: Vec<&DenseLayer> = self.encoder.iter().collect();
        out.push(&self.mu_head);
        out.push(&self.log_var_head);
        out.extend(self.decoder.iter());
        out
    }

    pub fn layers_mut(&mut self) -> Vec<&mut DenseLayer> {
        let mut out: Vec<&mut DenseLayer> = self.encoder.iter_mut().collect();
        out.push(&mut self.mu_head);
        out.push(&mut self.log_var_head);
        out.extend(self.decoder.iter_mut());
        out
    }

    pub fn param_count(&self) -> usize {
        self.layers().iter().map(|l| l.param_count()).sum()
    }

    /// Rounds every parameter to the nearest `f32`, matching the on-disk form.
    pub fn round_to_f32(&mut self) {
        for layer in self.layers_mut() {
            layer.weights.mapv_inplace(|v| v as f32 as f64);
            layer.bias.mapv_inplace(|v| v as f32 as f64);
        }
    }

    pub fn encode(&self, x: &[f64]) -> Result<(LatentVector, LatentVector), VaeError> {
        if x.len() != self.input_size() {
            return Err(VaeError::ShapeMismatch {
                expected: self.input_size(),
                got: x.len(),
            });
        }
        let mut h = Array1::from(x.to_vec());
        for layer in &self.encoder {
            h = layer.forward_one(h.view());
        }
        let mu = self.mu_head.forward_one(h.view());
        let lv = self.log_var_head.forward_one(h.view());
        Ok((LatentVector(mu.to_vec()), LatentVector(lv.to_vec())))
    }

    pub fn decode_logits(&self, z: &LatentVector) -> Array1<f64> {
        let mut h = Array1::from(z.0.clone());
        for layer in &self.decoder {
            h = layer.forward_one(h.view());
        }
        h
    }

    /// Argmax per position, ties to the lowest TileId.
    pub fn decode(&self, z: &LatentVector) -> Segment {
        let logits = self.decode_logits(z);
        let t = self.vocab_size;
        let mut tiles = [TileId(0); SEGMENT_TILES];
        for (pos, tile) in tiles.iter_mut().enumerate() {
            let row = &logits.as_slice().expect("contiguous")[pos * t..(pos + 1) * t];
            let mut best = 0;
            for k in 1..t {
                if row[k] > row[best] {
                    best = k;
                }
            }
            *tile = TileId(best as u8);
        }
        Segment::new(tiles, self.game_tag.clone())
    }

    /// Decodes the posterior mean of a segment.
    pub fn reconstruct(&self, segment: &Segment) -> Result<Segment, VaeError> {
        let x = one_hot(segment, self.vocab_size)?;
        let (mu, _) = self.encode(&x)?;
        Ok(self.decode(&mu))
    }

    /// Loss of one example with fixed reparameterization noise `eps`.
    pub fn loss(&self, x: &[f64], eps: &[f64], kl_weight: f64) -> Result<LossParts, VaeError> {
        if x.len() != self.input_size() {
            return Err(VaeError::ShapeMismatch {
                expected: self.input_size(),
                got: x.len(),
            });
        }
        if eps.len() != LATENT_DIM {
            return Err(VaeError::ShapeMismatch {
                expected: LATENT_DIM,
                got: eps.len(),
            });
        }
        let xb = Array2::from_shape_vec((1, x.len()), x.to_vec()).expect("shape");
        let eb = Array2::from_shape_vec((1, LATENT_DIM), eps.to_vec()).expect("shape");
        let pass = self.forward_batch(&xb, &eb);
        let parts = LossParts::from_pass(&pass, &xb, self.vocab_size, kl_weight);
        if !parts.total.is_finite() {
            return Err(VaeError::NonFiniteLoss);
        }
        Ok(parts)
    }

    fn forward_batch(&self, x: &Array2<f64>, eps: &Array2<f64>) -> ForwardPass {
        let mut enc_pre = Vec::with_capacity(self.encoder.len());
        let mut enc_act = vec![x.clone()];
        for layer in &self.encoder {
            let z = layer.pre(enc_act.last().expect("input"));
            enc_act.push(layer.activate(z.clone()));
            enc_pre.push(z);
        }
        let top = enc_act.last().expect("encoder output");
        let mu = self.mu_head.pre(top);
        let log_var = self.log_var_head.pre(top);
        let std = log_var.mapv(|v| (0.5 * v).exp());
        let z = &mu + &(&std * eps);
        let mut dec_pre = Vec::with_capacity(self.decoder.len());
        let mut dec_act = vec![z];
        for layer in &self.decoder {
            let p = layer.pre(dec_act.last().expect("latent"));
            dec_act.push(layer.activate(p.clone()));
            dec_pre.push(p);
        }
        ForwardPass {
            enc_pre,
            enc_act,
            mu,
            log_var,
            std,
            dec_pre,
            dec_act,
        }
    }

    /// Mean batch loss and its gradient with respect to every parameter,
    /// in [`VaeModel::layers`] order.
    pub fn loss_and_grad(
        &self,
        x: &Array2<f64>,
        eps: &Array2<f64>,
        kl_weight: f64,
    ) -> (LossParts, Gradients) {
        let b = x.nrows() as f64;
        let t = self.vocab_size;
        let pass = self.forward_batch(x, eps);
        let parts = LossParts::from_pass(&pass, x, t, kl_weight);

        // softmax cross-entropy gradient per position
        let logits = pass.dec_act.last().expect("logits");
        let mut d = logits.clone();
        for (mut drow, xrow) in d.axis_iter_mut(Axis(0)).zip(x.axis_iter(Axis(0))) {
            let ds = drow.as_slice_mut().expect("contiguous");
            let xs = xrow.as_slice().expect("contiguous");
            for pos in 0..SEGMENT_TILES {
                let seg = &mut ds[pos * t..(pos + 1) * t];
                let m = seg.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mut sum = 0.0;
                for v in seg.iter_mut() {
                    *v = (*v - m).exp();
                    sum += *v;
                }
                for (k, v) in seg.iter_mut().enumerate() {
                    *v = (*v / sum - xs[pos * t + k]) / b;
                }
            }
        }

        let mut dec_grads = Vec::with_capacity(self.decoder.len());
        for (i, layer) in self.decoder.iter().enumerate().rev() {
            let input = &pass.dec_act[i];
            dec_grads.push(LayerGrad {
                weights: d.t().dot(input),
                bias: d.sum_axis(Axis(0)),
            });
            let mut dx = d.dot(&layer.weights);
            if i > 0 {
                relu_mask(&mut dx, &pass.dec_pre[i - 1]);
            }
            d = dx;
        }
        dec_grads.reverse();

        // d is now dL/dz
        let exp_lv = pass.log_var.mapv(f64::exp);
        let d_mu = &d + &(&pass.mu * (kl_weight / b));
        let d_lv = &(&d * &(&pass.std * eps * 0.5)) + &((&exp_lv - 1.0) * (0.5 * kl_weight / b));

        let top = pass.enc_act.last().expect("encoder output");
        let mu_grad = LayerGrad {
            weights: d_mu.t().dot(top),
            bias: d_mu.sum_axis(Axis(0)),
        };
        let lv_grad = LayerGrad {
            weights: d_lv.t().dot(top),
            bias: d_lv.sum_axis(Axis(0)),
        };
        let mut d = d_mu.dot(&self.mu_head.weights) + d_lv.dot(&self.log_var_head.weights);
        let mut enc_grads = Vec::with_capacity(self.encoder.len());
        for (i, layer) in self.encoder.iter().enumerate().rev() {
            relu_mask(&mut d, &pass.enc_pre[i]);
            let input = &pass.enc_act[i];
            enc_grads.push(LayerGrad {
                weights: d.t().dot(input),
                bias: d.sum_axis(Axis(0)),
            });
            if i > 0 {
                d = d.dot(&layer.weights);
            }
        }
        enc_grads.reverse();

        let mut layers = enc_grads;
        layers.push(mu_grad);
        layers.push(lv_grad);
        layers.extend(dec_grads);
        (parts, Gradients { layers })
    }
}

fn relu_mask(d: &mut Array2<f64>, pre: &Array2<f64>) {
    ndarray::Zip::from(d).and(pre).for_each(|g, &p| {
        if p <= 0.0 {
            *g = 0.0;
        }
    });
}

struct ForwardPass {
    enc_pre: Vec<Array2<f64>>,
    enc_act: Vec<Array2<f64>>,
    mu: Array2<f64>,
    log_var: Array2<f64>,
    std: Array2<f64>,
    dec_pre: Vec<Array2<f64>>,
    dec_act: Vec<Array2<f64>>,
}

/// Loss terms averaged over a batch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossParts {
    pub total: f64,
    pub recon: f64,
    pub kl: f64,
}

impl LossParts {
    fn from_pass(pass: &ForwardPass, x: &Array2<f64>, t: usize, kl_weight: f64) -> Self {
        let b = x.nrows() as f64;
        let logits = pass.dec_act.last().expect("logits");
        let mut recon = 0.0;
        for (lrow, xrow) in logits.axis_iter(Axis(0)).zip(x.axis_iter(Axis(0))) {
            let ls = lrow.as_slice().expect("contiguous");
            let xs = xrow.as_slice().expect("contiguous");
            for pos in 0..SEGMENT_TILES {
                recon += softmax_xent(&ls[pos * t..(pos + 1) * t], &xs[pos * t..(pos + 1) * t]);
            }
        }
        let kl: f64 = ndarray::Zip::from(&pass.mu)
            .and(&pass.log_var)
            .fold(0.0, |acc, &m, &lv| acc + kl_term(m, lv));
        let recon = recon / b;
        let kl = kl / b;
        Self {
            total: recon + kl_weight * kl,
            recon,
            kl,
        }
    }
}

fn softmax_xent(logits: &[f64], target: &[f64]) -> f64 {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|&v| (v - m).exp()).sum::<f64>().ln();
    logits
        .iter()
        .zip(target)
        .map(|(&l, &y)| y * (lse - l))
        .sum()
}

/// One coordinate of `KL(N(mu, e^lv) || N(0, 1))`.
pub fn kl_term(mu: f64, log_var: f64) -> f64 {
    -0.5 * (1.0 + log_var - mu * mu - log_var.exp())
}

/// KL divergence of a diagonal Gaussian posterior from the standard normal.
pub fn kl_divergence(mu: &LatentVector, log_var: &LatentVector) -> f64 {
    mu.0.iter().zip(&log_var.0).map(|(&m, &lv)| kl_term(m, lv)).sum()
}

#[derive(Clone, Debug)]
pub struct LayerGrad {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Clone, Debug)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

pub fn one_hot(segment: &Segment, vocab_size: usize) -> Result<Vec<f64>, VaeError> {
    let mut v = vec![0.0; SEGMENT_TILES * vocab_size];
    for (pos, t) in segment.tiles().iter().enumerate() {
        if t.index() >= vocab_size {
            return Err(VaeError::TileOutOfRange {
                tile: t.0,
                vocab: vocab_size,
            });
        }
        v[pos * vocab_size + t.index()] = 1.0;
    }
    Ok(v)
}

/// `mu + exp(log_var / 2) ⊙ eps`, `eps ~ N(0, I)`.
pub fn reparameterize<R: Rng + ?Sized>(
    mu: &LatentVector,
    log_var: &LatentVector,
    rng: &mut R,
) -> LatentVector {
    LatentVector(
        mu.0.iter()
            .zip(&log_var.0)
            .map(|(&m, &lv)| {
                let e: f64 = StandardNormal.sample(rng);
                m + (0.5 * lv).exp() * e
            })
            .collect(),
    )
}

/// Draws from the latent prior `N(0, I)`.
pub fn sample_latent<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Vec<LatentVector>, VaeError> {
    if n == 0 {
        return Err(VaeError::EmptySample);
    }
    Ok((0..n)
        .map(|_| LatentVector((0..LATENT_DIM).map(|_| StandardNormal.sample(rng)).collect()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny() -> Architecture {
        Architecture {
            hidden: vec![8, 6, 4],
        }
    }

    #[test]
    fn one_hot_layout_and_mass() {
        let seg = Segment::filled(TileId(0), "T");
        let v = one_hot(&seg, 2).unwrap();
        assert_eq!(v.len(), 512);
        for pos in 0..256 {
            assert_eq!(v[pos * 2], 1.0);
            assert_eq!(v[pos * 2 + 1], 0.0);
        }
        let mixed = Segment::from_fn("T", |r, c| TileId(((r + c) % 3) as u8));
        let v = one_hot(&mixed, 3).unwrap();
        assert_eq!(v.iter().sum::<f64>(), 256.0);
        assert_eq!(
            one_hot(&mixed, 2),
            Err(VaeError::TileOutOfRange { tile: 2, vocab: 2 })
        );
    }

    #[test]
    fn zero_model_encodes_to_head_bias() {
        let mut m = VaeModel::zeroed(2, "T", &tiny());
        m.mu_head.bias.fill(0.25);
        m.log_var_head.bias.fill(-1.5);
        let x = one_hot(&Segment::filled(TileId(1), "T"), 2).unwrap();
        let (mu, lv) = m.encode(&x).unwrap();
        assert!(mu.0.iter().all(|&v| v == 0.25));
        assert!(lv.0.iter().all(|&v| v == -1.5));
        assert!(matches!(
            m.encode(&x[..10]),
            Err(VaeError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn bias_decides_zero_decoder() {
        let mut m = VaeModel::zeroed(3, "T", &tiny());
        let out = m.decoder.last_mut().unwrap();
        for pos in 0..256 {
            out.bias[pos * 3] = 1.0;
        }
        let seg = m.decode(&LatentVector(vec![3.0; 32]));
        assert!(seg.tiles().iter().all(|&t| t == TileId(0)));
        // all-zero logits tie, lowest id wins
        let z = VaeModel::zeroed(3, "T", &tiny());
        assert!(z.decode(&LatentVector::zeros()).tiles().iter().all(|&t| t == TileId(0)));
    }

    #[test]
    fn decode_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = VaeModel::new(4, "T", &tiny(), &mut rng);
        let z = sample_latent(1, &mut rng).unwrap().remove(0);
        assert_eq!(m.decode(&z), m.decode(&z));
        let x = one_hot(&m.decode(&z), 4).unwrap();
        assert_eq!(m.encode(&x).unwrap(), m.encode(&x).unwrap());
    }

    #[test]
    fn reparameterize_zero_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mu = LatentVector((0..32).map(|i| i as f64 * 0.1).collect());
        let lv = LatentVector(vec![-100.0; 32]);
        let z = reparameterize(&mu, &lv, &mut rng);
        for (a, b) in z.0.iter().zip(&mu.0) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn reparameterize_seeded() {
        let mu = LatentVector::zeros();
        let lv = LatentVector::zeros();
        let a = reparameterize(&mu, &lv, &mut ChaCha8Rng::seed_from_u64(9));
        let b = reparameterize(&mu, &lv, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn kl_closed_form_values() {
        assert_eq!(kl_divergence(&LatentVector::zeros(), &LatentVector::zeros()), 0.0);
        let mut mu = LatentVector::zeros();
        mu.0[0] = 1.0;
        assert!((kl_divergence(&mu, &LatentVector::zeros()) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn perfect_logits_have_no_recon_loss() {
        let mut m = VaeModel::zeroed(3, "T", &tiny());
        let seg = Segment::from_fn("T", |r, _| TileId((r % 3) as u8));
        let x = one_hot(&seg, 3).unwrap();
        let out = m.decoder.last_mut().unwrap();
        for (i, &v) in x.iter().enumerate() {
            out.bias[i] = v * 1e6;
        }
        let parts = m.loss(&x, &[0.0; 32], 1.0).unwrap();
        assert!(parts.recon < 1e-9);
        assert_eq!(parts.kl, 0.0);
    }

    #[test]
    fn sample_latent_rejects_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(sample_latent(0, &mut rng), Err(VaeError::EmptySample));
        let a = sample_latent(5, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = sample_latent(5, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
    }
}
