use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{Activation, Architecture, DenseLayer, TrainConfig, VaeModel, LATENT_DIM};

pub const MODEL_MANIFEST: &str = "model.json";
pub const MODEL_BLOB: &str = "model.bin";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed manifest: {0}")]
    Manifest(#[from] serde_json::Error),
    #[error("unsupported model format version {0}")]
    Version(u32),
    #[error("weight blob checksum mismatch")]
    Checksum,
    #[error("weight blob has {got} bytes, manifest implies {expected}")]
    BlobSize { expected: usize, got: usize },
    #[error("inconsistent layer layout: {0}")]
    Layout(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
}

/// Sidecar describing `model.bin`. The blob stores every layer in
/// [`VaeModel::layers`] order as little-endian `f32`: weights row-major
/// (`out × in`), then bias.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub format_version: u32,
    pub game_tag: String,
    /// Tile characters by id; empty when unknown.
    pub vocab: Vec<String>,
    pub vocab_size: usize,
    pub vocab_hash: String,
    pub latent_dim: usize,
    pub hidden: Vec<usize>,
    pub layers: Vec<LayerSpec>,
    pub train: Option<TrainConfig>,
    pub blob: String,
    pub blob_sha256: String,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ModelIoError + '_ {
    move |source| ModelIoError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn weight_blob(model: &VaeModel) -> Vec<u8> {
    let mut out = Vec::with_capacity(model.param_count() * 4);
    for layer in model.layers() {
        for &w in layer.weights.iter() {
            out.extend_from_slice(&(w as f32).to_le_bytes());
        }
        for &b in layer.bias.iter() {
            out.extend_from_slice(&(b as f32).to_le_bytes());
        }
    }
    out
}

/// SHA-256 of the serialized weights.
pub fn model_hash(model: &VaeModel) -> String {
    hex::encode(Sha256::digest(weight_blob(model)))
}

impl VaeModel {
    pub fn manifest(&self, vocab: Vec<String>, vocab_hash: String, train: Option<TrainConfig>) -> ModelManifest {
        ModelManifest {
            format_version: FORMAT_VERSION,
            game_tag: self.game_tag.clone(),
            vocab,
            vocab_size: self.vocab_size,
            vocab_hash,
            latent_dim: LATENT_DIM,
            hidden: self.architecture().hidden,
            layers: self
                .layers()
                .iter()
                .map(|l| LayerSpec {
                    inputs: l.inputs(),
                    outputs: l.outputs(),
                    activation: l.activation,
                })
                .collect(),
            train,
            blob: MODEL_BLOB.to_string(),
            blob_sha256: model_hash(self),
        }
    }

    /// Writes `model.json` and `model.bin` into `dir`.
    pub fn save(&self, dir: &Path, manifest: &ModelManifest) -> Result<(), ModelIoError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let blob_path = dir.join(MODEL_BLOB);
        fs::write(&blob_path, weight_blob(self)).map_err(io_err(&blob_path))?;
        let path = dir.join(MODEL_MANIFEST);
        fs::write(&path, serde_json::to_string_pretty(manifest)?).map_err(io_err(&path))?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<(VaeModel, ModelManifest), ModelIoError> {
        let path = dir.join(MODEL_MANIFEST);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let manifest: ModelManifest = serde_json::from_str(&text)?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(ModelIoError::Version(manifest.format_version));
        }
        let blob_path = dir.join(&manifest.blob);
        let blob = fs::read(&blob_path).map_err(io_err(&blob_path))?;
        if hex::encode(Sha256::digest(&blob)) != manifest.blob_sha256 {
            return Err(ModelIoError::Checksum);
        }
        let model = from_blob(&manifest, &blob)?;
        Ok((model, manifest))
    }
}

fn from_blob(manifest: &ModelManifest, blob: &[u8]) -> Result<VaeModel, ModelIoError> {
    if manifest.latent_dim != LATENT_DIM {
        return Err(ModelIoError::Layout(format!(
            "latent dimension {} unsupported",
            manifest.latent_dim
        )));
    }
    let arch = Architecture {
        hidden: manifest.hidden.clone(),
    };
    let mut model = VaeModel::zeroed(manifest.vocab_size, manifest.game_tag.clone(), &arch);
    let expected: Vec<LayerSpec> = model
        .layers()
        .iter()
        .map(|l| LayerSpec {
            inputs: l.inputs(),
            outputs: l.outputs(),
            activation: l.activation,
        })
        .collect();
    if expected != manifest.layers {
        return Err(ModelIoError::Layout(
            "layer list does not match the declared architecture".into(),
        ));
    }
    let need = model.param_count() * 4;
    if blob.len() != need {
        return Err(ModelIoError::BlobSize {
            expected: need,
            got: blob.len(),
        });
    }
    let mut floats = blob
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64);
    for layer in model.layers_mut() {
        let (o, i) = layer.weights.dim();
        let weights: Vec<f64> = floats.by_ref().take(o * i).collect();
        let bias: Vec<f64> = floats.by_ref().take(o).collect();
        *layer = DenseLayer {
            weights: Array2::from_shape_vec((o, i), weights).expect("blob length checked"),
            bias: Array1::from(bias),
            activation: layer.activation,
        };
    }
    Ok(model)
}
