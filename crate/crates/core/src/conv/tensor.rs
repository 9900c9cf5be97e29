use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Row-major, channel-last array of `rows × cols × channels` reals.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor {
    rows: usize,
    cols: usize,
    channels: usize,
    values: Vec<f64>,
}

/// A single-channel input image.
pub type Image = FeatureTensor;

impl FeatureTensor {
    pub fn new(rows: usize, cols: usize, channels: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols * channels {
            return Err(Error::Data(format!(
                "{rows}×{cols}×{channels} tensor needs {} values, got {}",
                rows * cols * channels,
                values.len()
            )));
        }
        Ok(FeatureTensor {
            rows,
            cols,
            channels,
            values,
        })
    }

    pub fn zeros(rows: usize, cols: usize, channels: usize) -> Self {
        FeatureTensor {
            rows,
            cols,
            channels,
            values: vec![0.0; rows * cols * channels],
        }
    }

    /// Single-channel image from row-major pixels.
    pub fn image(rows: usize, cols: usize, pixels: Vec<f64>) -> Result<Self> {
        FeatureTensor::new(rows, cols, 1, pixels)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.rows, self.cols, self.channels)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn index(&self, r: usize, c: usize, ch: usize) -> usize {
        (r * self.cols + c) * self.channels + ch
    }

    pub fn get(&self, r: usize, c: usize, ch: usize) -> f64 {
        self.values[self.index(r, c, ch)]
    }

    /// Value at a possibly out-of-bounds coordinate; outside reads are zero.
    #[inline]
    pub fn get_padded(&self, r: isize, c: isize, ch: usize) -> f64 {
        if r < 0 || c < 0 || r as usize >= self.rows || c as usize >= self.cols {
            0.0
        } else {
            self.values[self.index(r as usize, c as usize, ch)]
        }
    }

    pub fn set(&mut self, r: usize, c: usize, ch: usize, v: f64) {
        let i = self.index(r, c, ch);
        self.values[i] = v;
    }
}

const MAGIC: &[u8; 4] = b"QDCF";
const VERSION: u32 = 1;
const DTYPE_F64: u32 = 8;
const HEADER_LEN: u64 = 32;

/// Writes same-shaped tensors to one file.
///
/// Layout, all integers little-endian:
///
/// | bytes | field |
/// |-------|-------|
/// | 0..4  | magic `QDCF` |
/// | 4..8  | version `u32` = 1 |
/// | 8..12 | dtype `u32` = 8 (IEEE-754 binary64) |
/// | 12..20 | tensor count `u64` |
/// | 20..24 | rows `u32` |
/// | 24..28 | cols `u32` |
/// | 28..32 | channels `u32` |
/// | 32.. | `f64` values, tensor after tensor, row-major channel-last |
pub fn write_tensors(path: &Path, tensors: &[FeatureTensor]) -> Result<()> {
    let (rows, cols, channels) = tensors.first().map_or((0, 0, 0), |t| t.dims());
    if let Some(bad) = tensors.iter().find(|t| t.dims() != (rows, cols, channels)) {
        return Err(Error::Data(format!(
            "tensor file needs uniform shapes: {:?} vs {:?}",
            bad.dims(),
            (rows, cols, channels)
        )));
    }
    let ctx = || format!("writing {}", path.display());
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(ctx(), e))?);
    let mut header = Vec::with_capacity(HEADER_LEN as usize);
    header.extend_from_slice(MAGIC);
    header.extend_from_slice(&VERSION.to_le_bytes());
    header.extend_from_slice(&DTYPE_F64.to_le_bytes());
    header.extend_from_slice(&(tensors.len() as u64).to_le_bytes());
    for d in [rows, cols, channels] {
        header.extend_from_slice(&(d as u32).to_le_bytes());
    }
    w.write_all(&header).map_err(|e| Error::io(ctx(), e))?;
    for t in tensors {
        for v in &t.values {
            w.write_all(&v.to_le_bytes()).map_err(|e| Error::io(ctx(), e))?;
        }
    }
    w.flush().map_err(|e| Error::io(ctx(), e))
}

pub fn read_tensors(path: &Path) -> Result<Vec<FeatureTensor>> {
    let file = File::open(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let file_len = file.metadata().map(|m| m.len()).unwrap_or(0);
    let mut r = BufReader::new(file);
    let bad = |offset: u64, message: String| Error::Ingestion {
        path: path.to_path_buf(),
        offset,
        message,
    };
    let mut header = [0u8; HEADER_LEN as usize];
    r.read_exact(&mut header)
        .map_err(|_| bad(0, "file shorter than the 32-byte header".into()))?;
    if &header[0..4] != MAGIC {
        return Err(bad(0, "bad magic, expected QDCF".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap());
    if u32_at(4) != VERSION {
        return Err(bad(4, format!("unsupported version {}", u32_at(4))));
    }
    if u32_at(8) != DTYPE_F64 {
        return Err(bad(8, format!("unsupported dtype code {}", u32_at(8))));
    }
    let count = u64::from_le_bytes(header[12..20].try_into().unwrap());
    let (rows, cols, channels) = (u32_at(20) as usize, u32_at(24) as usize, u32_at(28) as usize);
    let per = (rows * cols * channels) as u64;
    let expected = HEADER_LEN + count * per * 8;
    if file_len != expected {
        return Err(bad(
            file_len.min(expected),
            format!("expected {expected} bytes for {count} tensors, file has {file_len}"),
        ));
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut buf = vec![0u8; per as usize * 8];
    for n in 0..count {
        r.read_exact(&mut buf)
            .map_err(|_| bad(HEADER_LEN + n * per * 8, "truncated payload".into()))?;
        let values = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        out.push(FeatureTensor {
            rows,
            cols,
            channels,
            values,
        });
    }
    Ok(out)
}
