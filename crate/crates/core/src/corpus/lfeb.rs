//! `LFEB` v1: little-endian binary container for per-layer embedding tensors.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "LFEB"
//! 4       4     u32 version (= 1)
//! 8       4     u32 n_layers
//! 12      4     u32 n_points
//! 16      4     u32 dim
//! 20      4·N   f32 values, layer-major, then point-major, then component
//! ```

use crate::error::{Error, Result};

use super::EmbeddingTensor;

pub const MAGIC: &[u8; 4] = b"LFEB";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 20;

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4-byte slice"))
}

pub fn decode(bytes: &[u8]) -> Result<EmbeddingTensor> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "LFEB header truncated: {} bytes",
            bytes.len()
        )));
    }
    if &bytes[0..4] != MAGIC {
        return Err(Error::Format("bad magic, expected LFEB".into()));
    }
    let version = read_u32(bytes, 4);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported LFEB version {version}")));
    }
    let n_layers = read_u32(bytes, 8) as usize;
    let n_points = read_u32(bytes, 12) as usize;
    let dim = read_u32(bytes, 16) as usize;
    if n_layers == 0 || n_points == 0 || dim == 0 {
        return Err(Error::Format(format!(
            "empty tensor shape {n_layers}x{n_points}x{dim}"
        )));
    }
    let count = n_layers
        .checked_mul(n_points)
        .and_then(|v| v.checked_mul(dim))
        .ok_or_else(|| Error::Format("tensor shape overflows".into()))?;
    let expected = HEADER_LEN + 4 * count;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "payload length {} does not match header (expected {expected} bytes)",
            bytes.len()
        )));
    }
    let values: Vec<f32> = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")))
        .collect();
    EmbeddingTensor::new(n_layers, n_points, dim, values)
}

pub fn encode(tensor: &EmbeddingTensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * tensor.values().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for v in [tensor.n_layers(), tensor.n_points(), tensor.dim()] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for v in tensor.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}
