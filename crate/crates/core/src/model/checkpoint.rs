use std::path::Path;

use super::head::DenseHead;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"QDCM";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 20;

/// Trained head plus filter angles.
///
/// Byte layout, integers and floats little-endian:
///
/// | bytes | field |
/// |-------|-------|
/// | 0..4 | magic `QDCM` |
/// | 4..8 | version `u32` = 1 |
/// | 8..12 | in_features `u32` |
/// | 12..16 | n_classes `u32` |
/// | 16..20 | n_theta `u32` |
/// | 20.. | weights (`in_features · n_classes` f64, row-major), bias (`n_classes` f64), theta (`n_theta` f64) |
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub head: DenseHead,
    pub theta: Vec<f64>,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let h = &self.head;
        let mut out = Vec::with_capacity(
            HEADER_LEN + 8 * (h.weights().len() + h.bias().len() + self.theta.len()),
        );
        out.extend_from_slice(MAGIC);
        for v in [VERSION, h.in_features() as u32, h.n_classes() as u32, self.theta.len() as u32] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in h.weights().iter().chain(h.bias()).chain(&self.theta) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Model(format!("invalid checkpoint: {m}"));
        if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
            return Err(bad("missing QDCM header"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
        if u32_at(4) != VERSION as usize {
            return Err(bad("unsupported version"));
        }
        let (n_in, n_cls, n_theta) = (u32_at(8), u32_at(12), u32_at(16));
        let n_vals = n_in * n_cls + n_cls + n_theta;
        if bytes.len() != HEADER_LEN + 8 * n_vals {
            return Err(bad("payload length does not match header"));
        }
        let vals: Vec<f64> = bytes[HEADER_LEN..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let (w, rest) = vals.split_at(n_in * n_cls);
        let (b, theta) = rest.split_at(n_cls);
        Ok(Checkpoint {
            head: DenseHead::from_parts(n_in, n_cls, w.to_vec(), b.to_vec())?,
            theta: theta.to_vec(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes =
            std::fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Checkpoint::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_round_trip() {
        let ck = Checkpoint {
            head: DenseHead::glorot(3, 10, 1),
            theta: vec![0.25, 1.5],
        };
        let bytes = ck.to_bytes();
        assert_eq!(bytes.len(), 20 + 8 * (30 + 10 + 2));
        assert_eq!(&bytes[8..12], &3u32.to_le_bytes());
        assert_eq!(&bytes[bytes.len() - 8..], &1.5f64.to_le_bytes());
        assert_eq!(Checkpoint::from_bytes(&bytes).unwrap(), ck);
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }
}
