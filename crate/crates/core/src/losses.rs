//! Cross-entropy, temperature-scaled softmax, KL mimicry loss, the combined
//! two-model objective, and ensemble inference.
//!
//! The per-model objective is
//!
//! ```text
//! L = (1 − α) · mean CE(softmax(z), y) + α · τ² · mean KL(peer ‖ softmax(z / τ))
//! ```
//!
//! where `peer` is the other model's `softmax(z_peer / τ)`, held fixed for the
//! step. Temperature enters only the mimicry term.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Probabilities below this are clamped before taking logarithms.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParams {
    pub tau: f64,
    pub alpha: f64,
}

impl LossParams {
    pub fn new(tau: f64, alpha: f64) -> Result<Self> {
        if !(tau >= 1.0) {
            return Err(Error::Parameter(format!("temperature {tau} must be >= 1")));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Parameter(format!("alpha {alpha} outside [0, 1]")));
        }
        Ok(Self { tau, alpha })
    }
}

/// `softmax(z / τ)`, stabilized by subtracting the maximum.
pub fn softmax_with_temperature(z: &[f64], tau: f64) -> Result<Vec<f64>> {
    if !(tau > 0.0) {
        return Err(Error::Parameter(format!("temperature {tau} must be positive")));
    }
    Ok(softmax_unchecked(z, tau))
}

fn softmax_unchecked(z: &[f64], tau: f64) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|&v| ((v - max) / tau).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Row-wise `softmax(z / τ)` of a `[b × C]` tensor.
pub fn softmax_rows(z: &Tensor, tau: f64) -> Result<Tensor> {
    if !(tau > 0.0) {
        return Err(Error::Parameter(format!("temperature {tau} must be positive")));
    }
    let mut out = z.clone();
    for i in 0..z.rows() {
        let p = softmax_unchecked(z.row(i), tau);
        out.row_mut(i).copy_from_slice(&p);
    }
    Ok(out)
}

/// `−ln pred[target]`, with the probability clamped to [`PROB_FLOOR`].
pub fn cross_entropy(pred: &[f64], target: usize) -> Result<f64> {
    let p = pred.get(target).ok_or_else(|| {
        Error::Label(format!("class {target} out of range for {} classes", pred.len()))
    })?;
    Ok(-p.max(PROB_FLOOR).ln())
}

/// `Σ p · ln(p / q)` with `0 · ln(0 / ·) = 0` and `q` clamped to [`PROB_FLOOR`].
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    p.iter()
        .zip(q)
        .filter(|(&p, _)| p > 0.0)
        .map(|(&p, &q)| p * (p.ln() - q.max(PROB_FLOOR).ln()))
        .sum()
}

/// Shannon entropy in nats.
pub fn entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum()
}

/// Combined supervised + mimicry loss for one model and its gradient with
/// respect to that model's logits.
///
/// `peer_probs` must be the peer's `softmax(z_peer / τ)`; it is a constant
/// here, so no gradient reaches the peer. Both the loss and the gradient
/// are means over the batch.
pub fn nct_loss(
    own_logits: &Tensor,
    peer_probs: &Tensor,
    targets: &[usize],
    params: LossParams,
) -> Result<(f64, Tensor)> {
    let (b, c) = (own_logits.rows(), own_logits.cols());
    if peer_probs.shape() != own_logits.shape() {
        return Err(Error::Shape(format!(
            "peer probabilities {:?} vs logits {:?}",
            peer_probs.shape(),
            own_logits.shape()
        )));
    }
    if targets.len() != b {
        return Err(Error::Shape(format!("{} targets for batch of {b}", targets.len())));
    }
    let LossParams { tau, alpha } = params;
    let inv_b = 1.0 / b as f64;
    let mut ce_sum = 0.0;
    let mut kl_sum = 0.0;
    let mut grad = Tensor::zeros(&[b, c]);
    for (i, &t) in targets.iter().enumerate() {
        let z = own_logits.row(i);
        let p = softmax_unchecked(z, 1.0);
        ce_sum += cross_entropy(&p, t)?;
        let q = peer_probs.row(i);
        let p_tau = softmax_unchecked(z, tau);
        kl_sum += kl_divergence(q, &p_tau);
        // d CE / dz = p − onehot;  d τ²·KL / dz = τ (p_τ − q)
        let g = grad.row_mut(i);
        for k in 0..c {
            let onehot = if k == t { 1.0 } else { 0.0 };
            g[k] = ((1.0 - alpha) * (p[k] - onehot) + alpha * tau * (p_tau[k] - q[k])) * inv_b;
        }
    }
    let loss = (1.0 - alpha) * ce_sum * inv_b + alpha * tau * tau * kl_sum * inv_b;
    Ok((loss, grad))
}

/// Plain mean cross-entropy over a batch and its gradient with respect to
/// the logits.
pub fn cross_entropy_loss(logits: &Tensor, targets: &[usize]) -> Result<(f64, Tensor)> {
    let b = logits.rows();
    if targets.len() != b {
        return Err(Error::Shape(format!("{} targets for batch of {b}", targets.len())));
    }
    let inv_b = 1.0 / b as f64;
    let mut sum = 0.0;
    let mut grad = Tensor::zeros(&[b, logits.cols()]);
    for (i, &t) in targets.iter().enumerate() {
        let p = softmax_unchecked(logits.row(i), 1.0);
        sum += cross_entropy(&p, t)?;
        for (k, g) in grad.row_mut(i).iter_mut().enumerate() {
            *g = (p[k] - if k == t { 1.0 } else { 0.0 }) * inv_b;
        }
    }
    Ok((sum * inv_b, grad))
}

/// `softmax((z1 + z2) / 2)`.
pub fn ensemble_predict(z1: &[f64], z2: &[f64]) -> Result<Vec<f64>> {
    if z1.len() != z2.len() {
        return Err(Error::Shape(format!("logits of length {} and {}", z1.len(), z2.len())));
    }
    let avg: Vec<f64> = z1.iter().zip(z2).map(|(a, b)| (a + b) / 2.0).collect();
    Ok(softmax_unchecked(&avg, 1.0))
}
