//! The "WSTX" tensor container.
//!
//! Layout: magic `WSTX`, `u16` version, `u8` rank, one `u32` per dimension,
//! then the row-major `f32` payload, all little-endian. A JSON sidecar next
//! to the tensor (`<file>.json`) records the producing configuration and the
//! source paths of the rows.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"WSTX";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub dims: Vec<u32>,
    pub data: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub config: serde_json::Value,
    pub paths: Vec<String>,
}

impl Tensor {
    pub fn new(dims: Vec<u32>, data: Vec<f32>) -> Result<Self> {
        let expected: u64 = dims.iter().map(|&d| d as u64).product();
        if dims.is_empty() || dims.len() > u8::MAX as usize {
            return Err(Error::Format(format!("unsupported rank {}", dims.len())));
        }
        if expected != data.len() as u64 {
            return Err(Error::Format(format!(
                "dims {dims:?} need {expected} values, got {}",
                data.len()
            )));
        }
        Ok(Tensor { dims, data })
    }

    /// Narrows a row-major `f64` matrix.
    pub fn from_matrix(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        Tensor::new(
            vec![rows as u32, cols as u32],
            values.iter().map(|&v| v as f32).collect(),
        )
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(7 + 4 * self.dims.len() + 4 * self.data.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(self.dims.len() as u8);
        for d in &self.dims {
            out.extend_from_slice(&d.to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Format(m.to_string());
        if bytes.len() < 7 || &bytes[..4] != MAGIC {
            return Err(bad("missing WSTX magic"));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let ndim = bytes[6] as usize;
        let header = 7 + 4 * ndim;
        if bytes.len() < header {
            return Err(bad("truncated header"));
        }
        let dims: Vec<u32> = bytes[7..header]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        let count: u64 = dims.iter().map(|&d| d as u64).product();
        if (bytes.len() - header) as u64 != 4 * count {
            return Err(bad("payload length does not match dims"));
        }
        let data = bytes[header..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Tensor::new(dims, data)
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes the tensor and its sidecar.
pub fn write_tensor(path: &Path, tensor: &Tensor, sidecar: &Sidecar) -> Result<()> {
    std::fs::write(path, tensor.to_bytes()).map_err(|e| Error::io(path, e))?;
    let side = sidecar_path(path);
    let json = serde_json::to_string_pretty(sidecar)?;
    std::fs::write(&side, json).map_err(|e| Error::io(&side, e))
}

pub fn read_tensor(path: &Path) -> Result<(Tensor, Sidecar)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let tensor = Tensor::from_bytes(&bytes)?;
    let side = sidecar_path(path);
    let text = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    Ok((tensor, serde_json::from_str(&text)?))
}
