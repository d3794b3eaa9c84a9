//! Named, independently reproducible random streams.
//!
//! Every stochastic component draws from its own ChaCha8 stream. A stream is
//! identified by `(master_seed, stream_id)`: the master seed keys the cipher
//! and the id selects the ChaCha stream (nonce), so streams never overlap and
//! a single integer reproduces an entire run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type Stream = ChaCha8Rng;

/// Stream ids of the named streams.
pub mod ids {
    pub const DATA_SHUFFLE: u64 = 1;
    pub const CORRUPTION: u64 = 2;
    pub const TV_MODEL_1: u64 = 3;
    pub const TV_MODEL_2: u64 = 4;
    pub const INIT_MODEL_1: u64 = 5;
    pub const INIT_MODEL_2: u64 = 6;
    pub const PROBE: u64 = 7;
    pub const BLOBS: u64 = 8;
}

pub fn stream(master_seed: u64, stream_id: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream_id);
    rng
}

/// Assignment of named streams used by a training run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamIds {
    pub shuffle: u64,
    pub init_model1: u64,
    pub init_model2: u64,
    pub tv_model1: u64,
    pub tv_model2: u64,
}

impl Default for StreamIds {
    fn default() -> Self {
        Self {
            shuffle: ids::DATA_SHUFFLE,
            init_model1: ids::INIT_MODEL_1,
            init_model2: ids::INIT_MODEL_2,
            tv_model1: ids::TV_MODEL_1,
            tv_model2: ids::TV_MODEL_2,
        }
    }
}

impl StreamIds {
    /// The same assignment with models 1 and 2 exchanged.
    pub fn swapped(self) -> Self {
        Self {
            init_model1: self.init_model2,
            init_model2: self.init_model1,
            tv_model1: self.tv_model2,
            tv_model2: self.tv_model1,
            ..self
        }
    }
}
