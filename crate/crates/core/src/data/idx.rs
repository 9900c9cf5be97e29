use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 2051;
pub const LABELS_MAGIC: u32 = 2049;

#[derive(Debug)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
    pub sha256: String,
}

#[derive(Debug)]
pub struct IdxLabels {
    pub labels: Vec<u8>,
    pub sha256: String,
}

struct Reader<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn err(&self, offset: usize, message: impl Into<String>) -> Error {
        Error::Ingestion {
            path: self.path.to_path_buf(),
            offset: offset as u64,
            message: message.into(),
        }
    }

    fn u32_be(&mut self, what: &str) -> Result<u32> {
        let end = self.pos + 4;
        let b = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| self.err(self.bytes.len(), format!("truncated before {what}")))?;
        self.pos = end;
        Ok(u32::from_be_bytes(b.try_into().unwrap()))
    }

    fn magic(&mut self, expected: u32) -> Result<()> {
        let m = self.u32_be("magic number")?;
        if m != expected {
            return Err(self.err(0, format!("bad magic {m}, expected {expected}")));
        }
        Ok(())
    }

    fn payload(&mut self, len: usize) -> Result<&'a [u8]> {
        let have = self.bytes.len() - self.pos;
        if have < len {
            return Err(self.err(
                self.bytes.len(),
                format!("truncated payload: header promises {len} bytes, {have} present"),
            ));
        }
        if have > len {
            return Err(self.err(
                self.pos + len,
                format!("{} trailing bytes after payload", have - len),
            ));
        }
        let p = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(p)
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))
}

/// Parses a big-endian IDX3 image file (magic 2051).
pub fn read_idx_images(path: &Path) -> Result<IdxImages> {
    let bytes = read_file(path)?;
    let mut r = Reader {
        path,
        bytes: &bytes,
        pos: 0,
    };
    r.magic(IMAGES_MAGIC)?;
    let count = r.u32_be("image count")? as usize;
    let rows = r.u32_be("row count")? as usize;
    let cols = r.u32_be("column count")? as usize;
    let pixels = r.payload(count * rows * cols)?.to_vec();
    Ok(IdxImages {
        count,
        rows,
        cols,
        pixels,
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

/// Parses a big-endian IDX1 label file (magic 2049).
pub fn read_idx_labels(path: &Path) -> Result<IdxLabels> {
    let bytes = read_file(path)?;
    let mut r = Reader {
        path,
        bytes: &bytes,
        pos: 0,
    };
    r.magic(LABELS_MAGIC)?;
    let count = r.u32_be("label count")? as usize;
    let labels = r.payload(count)?.to_vec();
    Ok(IdxLabels {
        labels,
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}
