//! `SMT1` tensor files: magic, `u8` rank, `u32` little-endian dims, then
//! row-major little-endian `f32` values.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"SMT1";
const MAX_ELEMENTS: u64 = 1 << 32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TensorError {
    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },
    #[error("trailing bytes after payload: {0}")]
    Trailing(u64),
    #[error("element count overflows for dims {0:?}")]
    DimOverflow(Vec<u32>),
    #[error("rank {0} exceeds 255")]
    RankTooLarge(usize),
    #[error("data length {data} does not match shape {shape:?}")]
    LengthMismatch { shape: Vec<usize>, data: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self, TensorError> {
        let n = element_count(&shape).ok_or_else(|| TensorError::DimOverflow(shape.iter().map(|&d| d as u32).collect()))?;
        if n != data.len() as u64 {
            return Err(TensorError::LengthMismatch { shape, data: data.len() });
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self { shape, data: vec![0.0; n] }
    }

    /// True when the data is bit-identical, NaN payloads included.
    pub fn bit_eq(&self, other: &Tensor) -> bool {
        self.shape == other.shape
            && self.data.len() == other.data.len()
            && self.data.iter().zip(&other.data).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

fn element_count(shape: &[usize]) -> Option<u64> {
    shape
        .iter()
        .try_fold(1u64, |acc, &d| acc.checked_mul(d as u64))
        .filter(|&n| n <= MAX_ELEMENTS)
}

pub fn encode(t: &Tensor) -> Result<Vec<u8>, TensorError> {
    if t.shape.len() > u8::MAX as usize {
        return Err(TensorError::RankTooLarge(t.shape.len()));
    }
    if t.shape.iter().any(|&d| d > u32::MAX as usize) {
        return Err(TensorError::DimOverflow(t.shape.iter().map(|&d| d as u32).collect()));
    }
    let n = element_count(&t.shape).ok_or_else(|| TensorError::DimOverflow(t.shape.iter().map(|&d| d as u32).collect()))?;
    if n != t.data.len() as u64 {
        return Err(TensorError::LengthMismatch {
            shape: t.shape.clone(),
            data: t.data.len(),
        });
    }
    let mut out = Vec::with_capacity(5 + 4 * t.shape.len() + 4 * t.data.len());
    out.extend_from_slice(MAGIC);
    out.push(t.shape.len() as u8);
    for &d in &t.shape {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in &t.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<Tensor, TensorError> {
    let truncated = |expected: u64| TensorError::Truncated {
        expected,
        found: bytes.len() as u64,
    };
    if bytes.len() < 5 {
        if bytes.len() >= 4 && &bytes[..4] != MAGIC {
            return Err(TensorError::BadMagic(bytes[..4].try_into().unwrap()));
        }
        return Err(truncated(5));
    }
    let magic: [u8; 4] = bytes[..4].try_into().unwrap();
    if &magic != MAGIC {
        return Err(TensorError::BadMagic(magic));
    }
    let rank = bytes[4] as usize;
    let header = 5 + 4 * rank;
    if bytes.len() < header {
        return Err(truncated(header as u64));
    }
    let dims: Vec<u32> = bytes[5..header]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let shape: Vec<usize> = dims.iter().map(|&d| d as usize).collect();
    let n = element_count(&shape).ok_or(TensorError::DimOverflow(dims))?;
    let expected = header as u64 + 4 * n;
    if (bytes.len() as u64) < expected {
        return Err(truncated(expected));
    }
    if bytes.len() as u64 > expected {
        return Err(TensorError::Trailing(bytes.len() as u64 - expected));
    }
    let data = bytes[header..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Tensor { shape, data })
}

pub fn write_tensor(path: &Path, t: &Tensor) -> crate::Result<()> {
    let bytes = encode(t)?;
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

pub fn read_tensor(path: &Path) -> crate::Result<Tensor> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    Ok(decode(&bytes)?)
}
