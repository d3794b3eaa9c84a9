//! Binary model format.
//!
//! ```text
//! magic    b"NCTM"
//! version  u32 LE (= 1)
//! n_dims   u32 LE
//! dims     n_dims × u32 LE           layer widths, input first
//! params   f64 LE, per layer: weights [fan_in × fan_out] row-major, then biases
//! ```

use std::fs;
use std::io::{Cursor, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};
use crate::nn::MlpModel;
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 4] = b"NCTM";
pub const VERSION: u32 = 1;

pub fn encode_model(model: &MlpModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.write_all(MAGIC).unwrap();
    out.write_u32::<LittleEndian>(VERSION).unwrap();
    out.write_u32::<LittleEndian>(model.layer_dims().len() as u32).unwrap();
    for &d in model.layer_dims() {
        out.write_u32::<LittleEndian>(d as u32).unwrap();
    }
    for v in model.flat_params() {
        out.write_f64::<LittleEndian>(v).unwrap();
    }
    out
}

pub fn decode_model(bytes: &[u8]) -> Result<MlpModel> {
    let bad = |m: &str| Error::Format(format!("model file: {m}"));
    let mut r = Cursor::new(bytes);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
    if &magic != MAGIC {
        return Err(bad("bad magic"));
    }
    let version = r.read_u32::<LittleEndian>().map_err(|_| bad("truncated header"))?;
    if version != VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let n = r.read_u32::<LittleEndian>().map_err(|_| bad("truncated header"))? as usize;
    if n > 64 {
        return Err(bad(&format!("{n} layer widths")));
    }
    let dims = (0..n)
        .map(|_| r.read_u32::<LittleEndian>().map(|d| d as usize))
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|_| bad("truncated dims"))?;
    if dims.len() < 2 || dims.contains(&0) {
        return Err(Error::InvalidArchitecture(format!("{dims:?}")));
    }
    let mut params = Vec::new();
    for w in dims.windows(2) {
        for shape in [vec![w[0], w[1]], vec![w[1]]] {
            let len = shape.iter().product();
            let mut values = vec![0.0; len];
            r.read_f64_into::<LittleEndian>(&mut values).map_err(|_| bad("truncated parameters"))?;
            params.push(Tensor::new(shape, values)?);
        }
    }
    if (r.position() as usize) != bytes.len() {
        return Err(bad("trailing bytes"));
    }
    MlpModel::from_params(&dims, params)
}

pub fn save_model(model: &MlpModel, path: &Path) -> Result<()> {
    fs::write(path, encode_model(model))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<MlpModel> {
    decode_model(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn round_trip() {
        let m = MlpModel::init(&[3, 4, 2], &mut stream(2, 5)).unwrap();
        let back = decode_model(&encode_model(&m)).unwrap();
        assert_eq!(back.flat_params(), m.flat_params());
        assert_eq!(back.layer_dims(), m.layer_dims());
    }

    #[test]
    fn rejects_corruption() {
        let m = MlpModel::init(&[2, 2], &mut stream(2, 5)).unwrap();
        let bytes = encode_model(&m);
        assert!(decode_model(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode_model(&extra).is_err());
        let mut wrong = bytes;
        wrong[0] = b'X';
        assert!(decode_model(&wrong).is_err());
    }
}
