//! Synthetic label corruption and the per-batch target-variability sampler.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    /// Resample uniformly over all classes; the true label may survive.
    #[serde(rename = "sym-incl")]
    SymmetricInclusive,
    /// Resample uniformly over the other `C − 1` classes.
    #[serde(rename = "sym-excl")]
    SymmetricExclusive,
    /// Map class `i` to `(i + 1) mod C`.
    #[serde(rename = "pair")]
    PairFlip,
}

impl NoiseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseKind::SymmetricInclusive => "sym-incl",
            NoiseKind::SymmetricExclusive => "sym-excl",
            NoiseKind::PairFlip => "pair",
        }
    }

    /// Expected fraction of labels that differ from the clean label.
    pub fn expected_flip_fraction(self, rate: f64, num_classes: usize) -> f64 {
        match self {
            NoiseKind::SymmetricInclusive => rate * (1.0 - 1.0 / num_classes as f64),
            NoiseKind::SymmetricExclusive | NoiseKind::PairFlip => rate,
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sym-incl" | "symmetric_inclusive" => Ok(NoiseKind::SymmetricInclusive),
            "sym-excl" | "symmetric_exclusive" => Ok(NoiseKind::SymmetricExclusive),
            "pair" | "pair_flip" => Ok(NoiseKind::PairFlip),
            other => Err(Error::Parameter(format!(
                "unknown noise kind {other:?} (expected sym-incl, sym-excl or pair)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub rate: f64,
    pub seed: u64,
}

/// Labels of a batch before and after target variability.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchLabels {
    pub original: Vec<usize>,
    pub perturbed: Vec<usize>,
    pub flip_mask: Vec<bool>,
}

/// Uniform draw from `0..num_classes` excluding `label`.
fn other_class<R: Rng>(rng: &mut R, label: usize, num_classes: usize) -> usize {
    let l = rng.random_range(0..num_classes - 1);
    if l >= label {
        l + 1
    } else {
        l
    }
}

fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::Parameter(format!("noise rate {rate} outside [0, 1]")));
    }
    Ok(())
}

/// Corrupts the labels of a clean dataset with `kind` noise at `rate`.
///
/// Every sample is selected independently with probability `rate` (one
/// uniform draw per sample); selected samples get a new label according to
/// the kind. `clean_labels` are never touched.
pub fn corrupt<R: Rng>(ds: &LabeledDataset, kind: NoiseKind, rate: f64, rng: &mut R) -> Result<LabeledDataset> {
    check_rate(rate)?;
    if !ds.is_clean() {
        return Err(Error::AlreadyCorrupted);
    }
    let c = ds.num_classes();
    if c < 2 {
        return Err(Error::DegenerateClasses(c));
    }
    if kind == NoiseKind::PairFlip && rate > 0.5 {
        log::warn!("pair-flip rate {rate} > 0.5 makes the flipped class the majority");
    }
    let labels = ds
        .clean_labels()
        .iter()
        .map(|&y| {
            if rng.random::<f64>() >= rate {
                return y;
            }
            match kind {
                NoiseKind::SymmetricInclusive => rng.random_range(0..c),
                NoiseKind::SymmetricExclusive => other_class(rng, y, c),
                NoiseKind::PairFlip => (y + 1) % c,
            }
        })
        .collect();
    ds.with_labels(labels)
}

pub fn corrupt_symmetric_inclusive<R: Rng>(ds: &LabeledDataset, rate: f64, rng: &mut R) -> Result<LabeledDataset> {
    corrupt(ds, NoiseKind::SymmetricInclusive, rate, rng)
}

pub fn corrupt_symmetric_exclusive<R: Rng>(ds: &LabeledDataset, rate: f64, rng: &mut R) -> Result<LabeledDataset> {
    corrupt(ds, NoiseKind::SymmetricExclusive, rate, rng)
}

pub fn corrupt_pair_flip<R: Rng>(ds: &LabeledDataset, rate: f64, rng: &mut R) -> Result<LabeledDataset> {
    corrupt(ds, NoiseKind::PairFlip, rate, rng)
}

/// Target variability for one model: mask `m_j = u_j < r_d`, random targets
/// `l_j ≠ y_j`, result `m ⊙ l + (1 − m) ⊙ y`. All masks are drawn first,
/// then all random targets.
pub fn target_variability<R: Rng>(y: &[usize], r_d: f64, num_classes: usize, rng: &mut R) -> Result<BatchLabels> {
    if num_classes < 2 {
        return Err(Error::DegenerateClasses(num_classes));
    }
    check_rate(r_d)?;
    if let Some(&bad) = y.iter().find(|&&l| l >= num_classes) {
        return Err(Error::Label(format!("label {bad} with {num_classes} classes")));
    }
    let flip_mask: Vec<bool> = y.iter().map(|_| rng.random::<f64>() < r_d).collect();
    let random: Vec<usize> = y.iter().map(|&l| other_class(rng, l, num_classes)).collect();
    let perturbed = y
        .iter()
        .zip(&random)
        .zip(&flip_mask)
        .map(|((&l, &r), &m)| if m { r } else { l })
        .collect();
    Ok(BatchLabels {
        original: y.to_vec(),
        perturbed,
        flip_mask,
    })
}

/// Independent target variability for both models, each from its own stream.
pub fn target_variability_batch<R1: Rng, R2: Rng>(
    y: &[usize],
    r_d: f64,
    num_classes: usize,
    stream1: &mut R1,
    stream2: &mut R2,
) -> Result<(BatchLabels, BatchLabels)> {
    Ok((
        target_variability(y, r_d, num_classes, stream1)?,
        target_variability(y, r_d, num_classes, stream2)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::tensor::Tensor;

    fn clean(n: usize, c: usize) -> LabeledDataset {
        let labels: Vec<usize> = (0..n).map(|i| i % c).collect();
        LabeledDataset::new(Tensor::zeros(&[n, 1]), labels.clone(), labels, c).unwrap()
    }

    fn differing(ds: &LabeledDataset) -> f64 {
        let n = ds.len();
        ds.labels().iter().zip(ds.clean_labels()).filter(|(a, b)| a != b).count() as f64 / n as f64
    }

    #[test]
    fn zero_rate_is_identity() {
        let ds = clean(500, 5);
        for kind in [NoiseKind::SymmetricInclusive, NoiseKind::SymmetricExclusive, NoiseKind::PairFlip] {
            assert_eq!(corrupt(&ds, kind, 0.0, &mut stream(1, 2)).unwrap(), ds);
        }
    }

    #[test]
    fn inclusive_rate_one_binary() {
        let ds = clean(10_000, 2);
        let out = corrupt_symmetric_inclusive(&ds, 1.0, &mut stream(4, 2)).unwrap();
        assert!((differing(&out) - 0.5).abs() < 0.015);
        assert_eq!(out.clean_labels(), ds.clean_labels());
    }

    #[test]
    fn inclusive_half_ten_classes() {
        let out = corrupt_symmetric_inclusive(&clean(10_000, 10), 0.5, &mut stream(5, 2)).unwrap();
        assert!((differing(&out) - 0.45).abs() < 0.015);
    }

    #[test]
    fn exclusive_never_keeps_selected_label() {
        let ds = clean(10_000, 7);
        let out = corrupt_symmetric_exclusive(&ds, 0.2, &mut stream(6, 2)).unwrap();
        assert!((differing(&out) - 0.2).abs() < 0.012);
        let all = corrupt_symmetric_exclusive(&ds, 1.0, &mut stream(6, 2)).unwrap();
        assert_eq!(differing(&all), 1.0);
    }

    #[test]
    fn pair_flip_maps_to_successor() {
        let ds = clean(10_000, 20);
        let out = corrupt_pair_flip(&ds, 0.45, &mut stream(7, 2)).unwrap();
        assert!((differing(&out) - 0.45).abs() < 0.015);
        for (&l, &c) in out.labels().iter().zip(ds.clean_labels()) {
            assert!(l == c || l == (c + 1) % 20);
        }
        let bin = corrupt_pair_flip(&clean(1000, 2), 0.45, &mut stream(7, 2)).unwrap();
        for (&l, &c) in bin.labels().iter().zip(bin.clean_labels()) {
            assert!(l == c || l == 1 - c);
        }
    }

    #[test]
    fn corruption_is_deterministic() {
        let ds = clean(1000, 4);
        let a = corrupt_symmetric_inclusive(&ds, 0.3, &mut stream(11, 2)).unwrap();
        let b = corrupt_symmetric_inclusive(&ds, 0.3, &mut stream(11, 2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn corruption_rejects_bad_input() {
        let ds = clean(100, 3);
        assert!(matches!(corrupt_pair_flip(&ds, 1.5, &mut stream(0, 2)), Err(Error::Parameter(_))));
        assert!(matches!(corrupt_pair_flip(&ds, -0.1, &mut stream(0, 2)), Err(Error::Parameter(_))));
        let noisy = corrupt_pair_flip(&ds, 0.5, &mut stream(0, 2)).unwrap();
        assert!(matches!(corrupt_pair_flip(&noisy, 0.1, &mut stream(0, 2)), Err(Error::AlreadyCorrupted)));
    }

    #[test]
    fn variability_extremes() {
        let y: Vec<usize> = (0..64).map(|i| i % 3).collect();
        let (a, b) = target_variability_batch(&y, 0.0, 3, &mut stream(1, 3), &mut stream(1, 4)).unwrap();
        assert_eq!(a.perturbed, y);
        assert_eq!(b.perturbed, y);
        let (a, b) = target_variability_batch(&y, 1.0, 3, &mut stream(1, 3), &mut stream(1, 4)).unwrap();
        assert!(a.perturbed.iter().zip(&y).all(|(p, o)| p != o));
        assert!(b.perturbed.iter().zip(&y).all(|(p, o)| p != o));
        assert!(a.flip_mask.iter().all(|&m| m));
    }

    #[test]
    fn variability_rejects_single_class() {
        assert!(matches!(
            target_variability(&[0, 0], 0.5, 1, &mut stream(0, 3)),
            Err(Error::DegenerateClasses(1))
        ));
    }

    #[test]
    fn swapping_streams_swaps_outputs() {
        let y: Vec<usize> = (0..50).map(|i| i % 4).collect();
        let (a, b) = target_variability_batch(&y, 0.4, 4, &mut stream(2, 3), &mut stream(2, 4)).unwrap();
        let (b2, a2) = target_variability_batch(&y, 0.4, 4, &mut stream(2, 4), &mut stream(2, 3)).unwrap();
        assert_eq!(a, a2);
        assert_eq!(b, b2);
    }
}
