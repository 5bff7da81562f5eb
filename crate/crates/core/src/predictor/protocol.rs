//! Newline-delimited JSON messages exchanged with an out-of-process predictor.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

pub const PROTOCOL_VERSION: u32 = 1;
pub const DTYPE: &str = "f32le";

/// Row-major little-endian f32 tensor, base64 encoded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireTensor {
    pub shape: Vec<usize>,
    pub dtype: String,
    pub data: String,
}

impl WireTensor {
    pub fn encode(shape: &[usize], values: &[f32]) -> Self {
        let mut bytes = Vec::with_capacity(values.len() * 4);
        for v in values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        Self {
            shape: shape.to_vec(),
            dtype: DTYPE.into(),
            data: STANDARD.encode(bytes),
        }
    }

    pub fn from_grid(g: &Grid<f64>) -> Self {
        let v: Vec<f32> = g.iter().map(|&x| x as f32).collect();
        Self::encode(&[1, g.height(), g.width()], &v)
    }

    pub fn decode(&self) -> Result<Vec<f32>> {
        if self.dtype != DTYPE {
            return Err(Error::Protocol(format!("unsupported dtype {:?}", self.dtype)));
        }
        let bytes = STANDARD
            .decode(&self.data)
            .map_err(|e| Error::Protocol(format!("bad base64: {e}")))?;
        let n = self
            .shape
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .ok_or_else(|| Error::Protocol(format!("shape {:?} overflows", self.shape)))?;
        if bytes.len() != n * 4 {
            return Err(Error::Protocol(format!(
                "shape {:?} needs {} bytes, payload has {}",
                self.shape,
                n * 4,
                bytes.len()
            )));
        }
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    /// Decodes a `[1, h, w]` tensor into a grid after checking the shape.
    pub fn to_grid(&self, h: usize, w: usize) -> Result<Grid<f64>> {
        if self.shape != [1, h, w] {
            return Err(Error::Protocol(format!(
                "expected shape [1, {h}, {w}], got {:?}",
                self.shape
            )));
        }
        let v = self.decode()?;
        Ok(Grid::from_vec(w, h, v.into_iter().map(f64::from).collect()).expect("length checked"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rays {
    pub depth: Vec<f32>,
    pub class: Vec<i32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictRequest {
    pub episode: u64,
    pub step: u64,
    pub target: usize,
    pub orientation_bin: u8,
    pub local: WireTensor,
    pub global: WireTensor,
    pub rays: Rays,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Message {
    Hello { version: u32 },
    Predict(PredictRequest),
    Costmap { nav: WireTensor, occ: WireTensor },
    Error { message: String },
}

impl Message {
    /// One JSON line including the trailing newline.
    pub fn to_line(&self) -> Result<String> {
        let mut s = serde_json::to_string(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_line(line: &str) -> Result<Self> {
        serde_json::from_str(line.trim_end()).map_err(|e| Error::Protocol(format!("malformed message: {e}")))
    }
}
