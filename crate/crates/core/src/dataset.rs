//! Labeled datasets carrying both working and hidden clean labels, and the
//! Gaussian-blob generator.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Tensor,
    labels: Vec<usize>,
    clean_labels: Vec<usize>,
    num_classes: usize,
    /// Set when the source had no clean-label column and the working labels
    /// were taken as clean.
    clean_labels_assumed: bool,
}

impl LabeledDataset {
    pub fn new(
        features: Tensor,
        labels: Vec<usize>,
        clean_labels: Vec<usize>,
        num_classes: usize,
    ) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::DegenerateClasses(num_classes));
        }
        if features.shape().len() != 2 {
            return Err(Error::Shape(format!("features must be 2-D, got {:?}", features.shape())));
        }
        let n = features.rows();
        if labels.len() != n || clean_labels.len() != n {
            return Err(Error::Shape(format!(
                "{n} samples, {} labels, {} clean labels",
                labels.len(),
                clean_labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().chain(&clean_labels).find(|&&l| l >= num_classes) {
            return Err(Error::Label(format!("label {bad} with {num_classes} classes")));
        }
        Ok(Self {
            features,
            labels,
            clean_labels,
            num_classes,
            clean_labels_assumed: false,
        })
    }

    pub fn assume_clean(mut self) -> Self {
        self.clean_labels_assumed = true;
        self
    }

    pub fn features(&self) -> &Tensor {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn clean_labels(&self) -> &[usize] {
        &self.clean_labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_features(&self) -> usize {
        self.features.cols()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn clean_labels_assumed(&self) -> bool {
        self.clean_labels_assumed
    }

    pub fn is_clean(&self) -> bool {
        self.labels == self.clean_labels
    }

    /// Fraction of samples whose working label differs from the clean one.
    pub fn noise_rate(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let flipped = self.labels.iter().zip(&self.clean_labels).filter(|(a, b)| a != b).count();
        flipped as f64 / self.len() as f64
    }

    /// Same samples with replaced working labels.
    pub fn with_labels(&self, labels: Vec<usize>) -> Result<Self> {
        let mut ds = Self::new(
            self.features.clone(),
            labels,
            self.clean_labels.clone(),
            self.num_classes,
        )?;
        ds.clean_labels_assumed = self.clean_labels_assumed;
        Ok(ds)
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Self::new(
            self.features.select_rows(indices),
            indices.iter().map(|&i| self.labels[i]).collect(),
            indices.iter().map(|&i| self.clean_labels[i]).collect(),
            self.num_classes,
        )
    }
}

/// Class means for the blob generator: `C` points with pairwise distance
/// `separation` when `d ≥ C` (scaled basis vectors), otherwise evenly spaced
/// on a circle in the first two coordinates (or on a line when `d = 1`) with
/// neighbouring means `separation` apart.
pub fn blob_means(d: usize, num_classes: usize, separation: f64) -> Vec<Vec<f64>> {
    let c = num_classes;
    (0..c)
        .map(|k| {
            let mut m = vec![0.0; d];
            if d >= c {
                m[k] = separation / std::f64::consts::SQRT_2;
            } else if d == 1 {
                m[0] = k as f64 * separation;
            } else {
                let angle = 2.0 * std::f64::consts::PI * k as f64 / c as f64;
                let radius = separation / (2.0 * (std::f64::consts::PI / c as f64).sin());
                m[0] = radius * angle.cos();
                m[1] = radius * angle.sin();
            }
            m
        })
        .collect()
}

/// `n` samples from `C` unit-variance isotropic Gaussians; sample `i` belongs
/// to class `i mod C`.
pub fn generate_blobs<R: Rng>(
    n: usize,
    d: usize,
    num_classes: usize,
    separation: f64,
    rng: &mut R,
) -> Result<LabeledDataset> {
    if num_classes < 2 {
        return Err(Error::DegenerateClasses(num_classes));
    }
    if n < num_classes || d == 0 {
        return Err(Error::Parameter(format!(
            "need n >= C and d >= 1, got n={n}, d={d}, C={num_classes}"
        )));
    }
    if !(separation >= 0.0) {
        return Err(Error::Parameter(format!("separation {separation} must be nonnegative")));
    }
    let means = blob_means(d, num_classes, separation);
    let mut values = Vec::with_capacity(n * d);
    let labels: Vec<usize> = (0..n).map(|i| i % num_classes).collect();
    for &y in &labels {
        for mu in &means[y] {
            values.push(mu + rng.sample::<f64, _>(StandardNormal));
        }
    }
    LabeledDataset::new(Tensor::new(vec![n, d], values)?, labels.clone(), labels, num_classes)
}
