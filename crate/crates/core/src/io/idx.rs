//! IDX (MNIST-style) ingestion: big-endian `0x00000803` image files of
//! unsigned bytes and `0x00000801` label files.

use std::fs;
use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{BigEndian, ReadBytesExt};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

fn truncated(what: &str) -> Error {
    Error::Format(format!("truncated {what}"))
}

fn read_header(bytes: &[u8], magic: u32, dims: usize, what: &str) -> Result<(Vec<usize>, usize)> {
    let mut r = Cursor::new(bytes);
    let found = r.read_u32::<BigEndian>().map_err(|_| truncated(what))?;
    if found != magic {
        return Err(Error::Format(format!(
            "{what}: magic {found:#010x}, expected {magic:#010x}"
        )));
    }
    let sizes = (0..dims)
        .map(|_| r.read_u32::<BigEndian>().map(|v| v as usize).map_err(|_| truncated(what)))
        .collect::<Result<Vec<_>>>()?;
    Ok((sizes, r.position() as usize))
}

/// Decodes an image file into `(count, rows·cols, pixels scaled to [0, 1])`.
pub fn parse_images(bytes: &[u8]) -> Result<(usize, usize, Vec<f64>)> {
    let (sizes, offset) = read_header(bytes, IMAGES_MAGIC, 3, "image file")?;
    let (n, d) = (sizes[0], sizes[1] * sizes[2]);
    let mut pixels = vec![0u8; n * d];
    Cursor::new(&bytes[offset..])
        .read_exact(&mut pixels)
        .map_err(|_| truncated("image file"))?;
    Ok((n, d, pixels.into_iter().map(|p| f64::from(p) / 255.0).collect()))
}

pub fn parse_labels(bytes: &[u8]) -> Result<Vec<usize>> {
    let (sizes, offset) = read_header(bytes, LABELS_MAGIC, 1, "label file")?;
    let body = &bytes[offset..];
    if body.len() < sizes[0] {
        return Err(truncated("label file"));
    }
    Ok(body[..sizes[0]].iter().map(|&b| usize::from(b)).collect())
}

pub fn load_idx(images_path: &Path, labels_path: &Path, num_classes: Option<usize>) -> Result<LabeledDataset> {
    let (n, d, pixels) = parse_images(&fs::read(images_path)?)?;
    let labels = parse_labels(&fs::read(labels_path)?)?;
    if labels.len() != n {
        return Err(Error::Format(format!("{n} images but {} labels", labels.len())));
    }
    if n == 0 || d == 0 {
        return Err(Error::EmptyDataset(images_path.display().to_string()));
    }
    let c = num_classes.unwrap_or_else(|| labels.iter().max().unwrap() + 1);
    Ok(LabeledDataset::new(Tensor::new(vec![n, d], pixels)?, labels.clone(), labels, c)?.assume_clean())
}
