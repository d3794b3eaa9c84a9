#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Noisy concurrent training: two classifiers trained together under label
//! noise with a temperature-scaled mimicry loss, a ramped supervised/mimicry
//! balance and ramped per-model target variability, together with the
//! baselines, ablations, noise models and representation probe needed to
//! study it at desk scale.

pub mod config;
pub mod dataset;
pub mod error;
pub mod io;
pub mod losses;
pub mod metrics;
pub mod nn;
pub mod noise;
pub mod probe;
pub mod rng;
pub mod schedules;
pub mod tensor;
pub mod trainer;

pub use config::{DataSource, RunConfig};
pub use dataset::{generate_blobs, LabeledDataset};
pub use error::{Error, Result};
pub use losses::LossParams;
pub use nn::{MlpModel, SgdState};
pub use noise::{NoiseKind, NoiseSpec};
pub use probe::{ProbeConfig, ProbeResult};
pub use rng::StreamIds;
pub use schedules::ScheduleParams;
pub use tensor::Tensor;
pub use trainer::{DualModelState, EpochMetrics, Method, RunSummary, TrainConfig};
