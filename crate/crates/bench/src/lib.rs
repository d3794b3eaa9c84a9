//! Fixtures shared by the benchmarks.

use nct_core::noise::corrupt;
use nct_core::rng::{ids, stream};
use nct_core::{generate_blobs, LabeledDataset, NoiseKind};

/// Two-class blobs in the plane with 40% symmetric-exclusive noise, plus a
/// clean test set of the same size.
pub fn noisy_blobs(n: usize, seed: u64) -> (LabeledDataset, LabeledDataset) {
    let clean = generate_blobs(n, 2, 2, 3.0, &mut stream(seed, ids::BLOBS)).expect("valid blob parameters");
    let noisy = corrupt(&clean, NoiseKind::SymmetricExclusive, 0.4, &mut stream(seed, ids::CORRUPTION))
        .expect("clean input");
    let test = generate_blobs(n, 2, 2, 3.0, &mut stream(seed + 1000, ids::BLOBS)).expect("valid blob parameters");
    (noisy, test)
}
