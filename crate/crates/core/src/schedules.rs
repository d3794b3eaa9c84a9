//! Per-epoch schedules: the mimicry weight ramp, the target-variability rate
//! ramp, and the step learning-rate decay.
//!
//! Epochs are 1-indexed during training; every function also accepts `e = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleParams {
    pub alpha_max: f64,
    /// Magnitude of the ramp shape parameter; the ramp is `exp(−beta_mag · (1 − e/e_r)²)`.
    pub beta_mag: f64,
    pub ramp_len: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub warmup: usize,
    pub total_epochs: usize,
    pub lr_initial: f64,
    pub lr_decay_epoch: usize,
    pub lr_decay_factor: f64,
}

impl ScheduleParams {
    /// Defaults for a run of `total_epochs`: ramp and decay at 90% of the run.
    pub fn with_total_epochs(total_epochs: usize) -> Self {
        let ninety = ((total_epochs as f64) * 0.9).round().max(1.0) as usize;
        Self {
            alpha_max: 0.9,
            beta_mag: 0.65,
            ramp_len: ninety,
            r_min: 0.0,
            r_max: 0.5,
            warmup: 1,
            total_epochs,
            lr_initial: 0.02,
            lr_decay_epoch: ninety,
            lr_decay_factor: 10.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Parameter(m));
        if !(0.0..=1.0).contains(&self.alpha_max) {
            return err(format!("alpha_max {} outside [0, 1]", self.alpha_max));
        }
        if !(self.beta_mag > 0.0) {
            return err(format!("beta_mag {} must be positive", self.beta_mag));
        }
        if self.ramp_len == 0 || self.ramp_len > self.total_epochs.max(1) {
            return err(format!(
                "ramp_len {} must lie in [1, total_epochs = {}]",
                self.ramp_len, self.total_epochs
            ));
        }
        if !(0.0..=1.0).contains(&self.r_min)
            || !(0.0..=1.0).contains(&self.r_max)
            || self.r_min > self.r_max
        {
            return err(format!(
                "need 0 <= r_min <= r_max <= 1, got r_min {} r_max {}",
                self.r_min, self.r_max
            ));
        }
        if self.total_epochs > 0 && self.warmup >= self.total_epochs {
            return err(format!(
                "warmup {} must be shorter than total_epochs {}",
                self.warmup, self.total_epochs
            ));
        }
        if !(self.lr_initial > 0.0) {
            return err(format!("lr_initial {} must be positive", self.lr_initial));
        }
        if self.lr_decay_epoch == 0 {
            return err("lr_decay_epoch must be positive".into());
        }
        if !(self.lr_decay_factor > 1.0) {
            return err(format!("lr_decay_factor {} must exceed 1", self.lr_decay_factor));
        }
        Ok(())
    }

    fn check_epoch(&self, e: usize) -> Result<()> {
        if e > self.total_epochs {
            return Err(Error::Parameter(format!(
                "epoch {e} beyond total_epochs {}",
                self.total_epochs
            )));
        }
        Ok(())
    }
}

/// Mimicry weight `α_max · exp(−beta_mag · (1 − e/e_r)²)`, held at `α_max`
/// from `e_r` on.
pub fn alpha_at_epoch(e: usize, p: &ScheduleParams) -> Result<f64> {
    p.check_epoch(e)?;
    if e >= p.ramp_len {
        return Ok(p.alpha_max);
    }
    let t = 1.0 - e as f64 / p.ramp_len as f64;
    Ok(p.alpha_max * (-p.beta_mag * t * t).exp())
}

/// Target-variability rate: `r_min` through the warmup, then a logarithmic
/// ramp reaching `r_max` at the final epoch.
pub fn variability_rate_at_epoch(e: usize, p: &ScheduleParams) -> Result<f64> {
    p.check_epoch(e)?;
    let span = p.total_epochs as i64 - p.warmup as i64;
    if span < 2 {
        return Err(Error::DegenerateSchedule { span });
    }
    if e <= p.warmup {
        return Ok(p.r_min);
    }
    let t = ((e - p.warmup) as f64).ln() / (span as f64).ln();
    // Interpolating this way makes t = 0 and t = 1 land exactly on the endpoints.
    Ok((1.0 - t) * p.r_min + t * p.r_max)
}

pub fn lr_at_epoch(e: usize, p: &ScheduleParams) -> Result<f64> {
    p.check_epoch(e)?;
    Ok(if e < p.lr_decay_epoch {
        p.lr_initial
    } else {
        p.lr_initial / p.lr_decay_factor
    })
}
