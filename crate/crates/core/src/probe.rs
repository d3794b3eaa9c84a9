//! Information-compression probe: how well can a fresh MLP head fit random
//! binary labels on top of frozen penultimate-layer features?
//!
//! A higher final training error means the frozen representation retains
//! less sample-specific information.

use rand::Rng;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::losses::cross_entropy_loss;
use crate::nn::{sgd_step, MlpModel, SgdState};
use crate::rng::{ids, stream};
use crate::tensor::Tensor;
use crate::trainer::argmax;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub hidden_dims: Vec<usize>,
    /// Samples taken from classes 0 and 1, half from each.
    pub num_samples: usize,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            hidden_dims: vec![400, 200],
            num_samples: 1000,
            epochs: 200,
            lr: 0.01,
            batch_size: 128,
            seed: 0,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_dims.is_empty() || self.hidden_dims.contains(&0) {
            return Err(Error::Parameter(format!("probe hidden dims {:?}", self.hidden_dims)));
        }
        if self.num_samples == 0 || !self.num_samples.is_multiple_of(2) {
            return Err(Error::Parameter(format!(
                "probe num_samples {} must be even and positive",
                self.num_samples
            )));
        }
        if !(self.lr > 0.0) || self.batch_size == 0 {
            return Err(Error::Parameter("probe lr and batch size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub num_samples: usize,
    pub feature_dim: usize,
    pub final_train_error: f64,
}

/// Penultimate-layer activations of `model` for every sample of `ds`.
pub fn extract_frozen_features(model: &MlpModel, ds: &LabeledDataset) -> Result<Tensor> {
    if model.num_layers() < 2 {
        return Err(Error::ProbeUnsupported);
    }
    let (_, cache) = model.forward(ds.features())?;
    Ok(cache.penultimate().expect("model has a hidden layer").clone())
}

/// Indices of the first `num_samples / 2` samples of clean class 0 and of
/// clean class 1, in dataset order.
pub fn first_two_class_indices(ds: &LabeledDataset, num_samples: usize) -> Result<Vec<usize>> {
    let per_class = num_samples / 2;
    let mut picked = Vec::with_capacity(num_samples);
    for class in 0..2 {
        let idx: Vec<usize> = (0..ds.len())
            .filter(|&i| ds.clean_labels()[i] == class)
            .take(per_class)
            .collect();
        if idx.len() < per_class {
            return Err(Error::InsufficientSamples(format!(
                "class {class} has {} samples, probe needs {per_class}",
                idx.len()
            )));
        }
        picked.extend(idx);
    }
    picked.sort_unstable();
    Ok(picked)
}

/// Trains a `[h, hidden..., 2]` head with plain SGD on fair-coin labels and
/// returns its final training error.
pub fn fit_random_binary_labels(features: &Tensor, cfg: &ProbeConfig) -> Result<f64> {
    cfg.validate()?;
    let n = features.rows();
    if n < 2 * cfg.batch_size {
        return Err(Error::InsufficientSamples(format!(
            "{n} samples, need at least twice the batch size {}",
            cfg.batch_size
        )));
    }

    let mut rng = stream(cfg.seed, ids::PROBE);
    let labels: Vec<usize> = (0..n).map(|_| usize::from(rng.random::<bool>())).collect();
    let mut dims = vec![features.cols()];
    dims.extend(&cfg.hidden_dims);
    dims.push(2);
    let mut head = MlpModel::init(&dims, &mut rng)?;
    let mut opt = SgdState::new(&head, cfg.lr, 0.0, 0.0)?;

    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for idx in order.chunks(cfg.batch_size) {
            let x = features.select_rows(idx);
            let y: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
            let (z, cache) = head.forward(&x)?;
            let (_, g) = cross_entropy_loss(&z, &y)?;
            let grads = head.backward(&cache, &g)?;
            sgd_step(&mut head, &grads, &mut opt)?;
        }
    }

    let z = head.logits(features)?;
    let wrong = (0..n).filter(|&i| argmax(z.row(i)) != labels[i]).count();
    Ok(wrong as f64 / n as f64)
}

/// Full probe of one base model: select the first two classes, freeze the
/// features and fit random labels. `model` is not modified.
pub fn probe_model(model: &MlpModel, ds: &LabeledDataset, cfg: &ProbeConfig) -> Result<ProbeResult> {
    cfg.validate()?;
    let subset = ds.subset(&first_two_class_indices(ds, cfg.num_samples)?)?;
    let features = extract_frozen_features(model, &subset)?;
    Ok(ProbeResult {
        num_samples: subset.len(),
        feature_dim: features.cols(),
        final_train_error: fit_random_binary_labels(&features, cfg)?,
    })
}
