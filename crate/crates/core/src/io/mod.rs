//! Dataset and model file formats.

pub mod csv;
pub mod idx;
pub mod model_file;
