use crate::error::{Error, Result};
use crate::nn::MlpModel;
use crate::tensor::Tensor;

/// SGD with classic (coupled) weight decay and heavy-ball momentum.
#[derive(Debug, Clone, PartialEq)]
pub struct SgdState {
    pub momentum_buffers: Vec<Tensor>,
    pub momentum: f64,
    pub weight_decay: f64,
    pub learning_rate: f64,
}

impl SgdState {
    pub fn new(model: &MlpModel, learning_rate: f64, momentum: f64, weight_decay: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&momentum) {
            return Err(Error::Parameter(format!("momentum {momentum} outside [0, 1)")));
        }
        if !(weight_decay >= 0.0) {
            return Err(Error::Parameter(format!("weight decay {weight_decay} is negative")));
        }
        if !(learning_rate > 0.0) {
            return Err(Error::Parameter(format!("learning rate {learning_rate} must be positive")));
        }
        Ok(Self {
            momentum_buffers: model.params().iter().map(|p| Tensor::zeros(p.shape())).collect(),
            momentum,
            weight_decay,
            learning_rate,
        })
    }
}

/// One update, applied to every parameter (biases included):
///
/// ```text
/// v ← momentum · v + (grad + weight_decay · param)
/// param ← param − lr · v
/// ```
///
/// Nothing is modified if any gradient is non-finite.
pub fn sgd_step(model: &mut MlpModel, grads: &[Tensor], state: &mut SgdState) -> Result<()> {
    if grads.len() != model.params().len() || state.momentum_buffers.len() != grads.len() {
        return Err(Error::Shape(format!(
            "{} gradients, {} buffers for {} parameters",
            grads.len(),
            state.momentum_buffers.len(),
            model.params().len()
        )));
    }
    for (i, (g, p)) in grads.iter().zip(model.params()).enumerate() {
        if g.shape() != p.shape() || state.momentum_buffers[i].shape() != p.shape() {
            return Err(Error::Shape(format!(
                "parameter {i}: gradient {:?}, buffer {:?}, parameter {:?}",
                g.shape(),
                state.momentum_buffers[i].shape(),
                p.shape()
            )));
        }
        if !g.is_finite() {
            return Err(Error::NonFiniteGradient { layer: i / 2 });
        }
    }

    let (mu, wd, lr) = (state.momentum, state.weight_decay, state.learning_rate);
    for ((p, g), v) in model
        .params_mut()
        .iter_mut()
        .zip(grads)
        .zip(&mut state.momentum_buffers)
    {
        for ((p, &g), v) in p.data_mut().iter_mut().zip(g.data()).zip(v.data_mut()) {
            *v = mu * *v + (g + wd * *p);
            *p -= lr * *v;
        }
    }
    model.bump_version();
    Ok(())
}
