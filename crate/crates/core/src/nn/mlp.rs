use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Multi-layer perceptron: ReLU on every hidden layer, identity on the output.
///
/// Parameters are stored as `[W0, b0, W1, b1, ...]` where `Wl` has shape
/// `[fan_in × fan_out]` and a layer computes `x · Wl + bl`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layer_dims: Vec<usize>,
    params: Vec<Tensor>,
    /// Incremented by every parameter update; stamps forward caches.
    version: u64,
}

/// Per-parameter gradients, in the same order as [`MlpModel::params`].
pub type Gradients = Vec<Tensor>;

/// Activations recorded by [`MlpModel::forward`] for use by `backward`.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    layer_dims: Vec<usize>,
    version: u64,
    /// Input to each layer: the batch, then each hidden activation (post-ReLU).
    inputs: Vec<Tensor>,
}

impl ForwardCache {
    pub fn batch_size(&self) -> usize {
        self.inputs[0].rows()
    }

    /// Output of the last hidden layer (post-ReLU), if any.
    pub fn penultimate(&self) -> Option<&Tensor> {
        if self.inputs.len() > 1 {
            self.inputs.last()
        } else {
            None
        }
    }
}

fn validate_dims(layer_dims: &[usize]) -> Result<()> {
    if layer_dims.len() < 2 {
        return Err(Error::InvalidArchitecture(format!(
            "need at least input and output widths, got {layer_dims:?}"
        )));
    }
    if layer_dims.contains(&0) {
        return Err(Error::InvalidArchitecture(format!(
            "layer widths must be positive, got {layer_dims:?}"
        )));
    }
    Ok(())
}

impl MlpModel {
    /// He-initialized model: weights ~ N(0, 2/fan_in), biases zero.
    pub fn init<R: Rng>(layer_dims: &[usize], rng: &mut R) -> Result<Self> {
        validate_dims(layer_dims)?;
        let mut params = Vec::with_capacity(2 * (layer_dims.len() - 1));
        for w in layer_dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let std = (2.0 / fan_in as f64).sqrt();
            let weights = (0..fan_in * fan_out)
                .map(|_| std * rng.sample::<f64, _>(StandardNormal))
                .collect();
            params.push(Tensor::new(vec![fan_in, fan_out], weights)?);
            params.push(Tensor::zeros(&[fan_out]));
        }
        Ok(Self {
            layer_dims: layer_dims.to_vec(),
            params,
            version: 0,
        })
    }

    /// Builds a model from explicit parameters, laid out as in [`MlpModel::params`].
    pub fn from_params(layer_dims: &[usize], params: Vec<Tensor>) -> Result<Self> {
        validate_dims(layer_dims)?;
        if params.len() != 2 * (layer_dims.len() - 1) {
            return Err(Error::InvalidArchitecture(format!(
                "{} parameter tensors for {} layers",
                params.len(),
                layer_dims.len() - 1
            )));
        }
        for (l, w) in layer_dims.windows(2).enumerate() {
            if params[2 * l].shape() != [w[0], w[1]] || params[2 * l + 1].shape() != [w[1]] {
                return Err(Error::Shape(format!(
                    "layer {l}: expected weight [{}, {}] and bias [{}], got {:?} and {:?}",
                    w[0],
                    w[1],
                    w[1],
                    params[2 * l].shape(),
                    params[2 * l + 1].shape()
                )));
            }
        }
        Ok(Self {
            layer_dims: layer_dims.to_vec(),
            params,
            version: 0,
        })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn num_classes(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.layer_dims.len() - 1
    }

    pub fn params(&self) -> &[Tensor] {
        &self.params
    }

    pub(crate) fn params_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    pub(crate) fn bump_version(&mut self) {
        self.version += 1;
    }

    pub fn weight(&self, layer: usize) -> &Tensor {
        &self.params[2 * layer]
    }

    pub fn bias(&self, layer: usize) -> &Tensor {
        &self.params[2 * layer + 1]
    }

    pub fn num_params(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    /// Flattened copy of all parameters.
    pub fn flat_params(&self) -> Vec<f64> {
        self.params.iter().flat_map(|t| t.data().iter().copied()).collect()
    }

    /// Overwrites all parameters from a flat slice of length [`num_params`](Self::num_params).
    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::Shape(format!(
                "{} values for {} parameters",
                flat.len(),
                self.num_params()
            )));
        }
        let mut offset = 0;
        for t in &mut self.params {
            let n = t.len();
            t.data_mut().copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        self.version += 1;
        Ok(())
    }

    pub fn forward(&self, batch: &Tensor) -> Result<(Tensor, ForwardCache)> {
        if batch.shape().len() != 2 || batch.cols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "batch {:?} for input width {}",
                batch.shape(),
                self.input_dim()
            )));
        }
        let last = self.num_layers() - 1;
        let mut inputs = Vec::with_capacity(self.num_layers());
        let mut x = batch.clone();
        for l in 0..self.num_layers() {
            let mut z = x.matmul(self.weight(l))?;
            z.add_row_vector(self.bias(l))?;
            inputs.push(x);
            x = if l == last { z } else { z.map(|v| v.max(0.0)) };
        }
        let cache = ForwardCache {
            layer_dims: self.layer_dims.clone(),
            version: self.version,
            inputs,
        };
        Ok((x, cache))
    }

    pub fn logits(&self, batch: &Tensor) -> Result<Tensor> {
        self.forward(batch).map(|(z, _)| z)
    }

    /// Gradients of a loss with respect to every parameter, given the loss
    /// gradient with respect to the logits. For a mean-over-batch loss the
    /// caller supplies `dLoss/dLogits` already divided by the batch size.
    pub fn backward(&self, cache: &ForwardCache, d_logits: &Tensor) -> Result<Gradients> {
        if cache.layer_dims != self.layer_dims {
            return Err(Error::Cache(format!(
                "cache for {:?}, model {:?}",
                cache.layer_dims, self.layer_dims
            )));
        }
        if cache.version != self.version {
            return Err(Error::Cache(
                "model parameters changed since the forward pass".into(),
            ));
        }
        let b = cache.batch_size();
        if d_logits.shape() != [b, self.num_classes()] {
            return Err(Error::Shape(format!(
                "dLoss/dLogits {:?}, expected [{b}, {}]",
                d_logits.shape(),
                self.num_classes()
            )));
        }

        let mut grads = vec![Tensor::zeros(&[1]); self.params.len()];
        let mut delta = d_logits.clone();
        for l in (0..self.num_layers()).rev() {
            let input = &cache.inputs[l];
            grads[2 * l] = input.t_matmul(&delta)?;
            grads[2 * l + 1] = delta.sum_rows();
            if l > 0 {
                let back = delta.matmul_t(self.weight(l))?;
                // ReLU derivative, read off the post-activation values.
                delta = back.zip_map(input, |g, a| if a > 0.0 { g } else { 0.0 })?;
            }
        }
        Ok(grads)
    }
}
