use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::conv::{quantum_conv, read_tensors, write_tensors, ConvGeometry, FeatureTensor};
use crate::data::DatasetSplit;
use crate::error::Result;
use crate::qfilter::{Executor, QuantumFilter, Readout};

/// Runs the filter over every image of `split`, in parallel over images.
/// Output order matches the split.
pub fn precompute_features(
    split: &DatasetSplit,
    filter: &QuantumFilter,
    geometry: &ConvGeometry,
    executor: &Executor,
) -> Result<Vec<FeatureTensor>> {
    (0..split.len())
        .into_par_iter()
        .map(|i| quantum_conv(&split.image(i), filter, geometry, executor))
        .collect()
}

/// Identifies a set of feature tensors: the source files, the chosen
/// samples, the circuit, its angles, the geometry and the readout.
pub fn feature_cache_key(
    split: &DatasetSplit,
    filter: &QuantumFilter,
    geometry: &ConvGeometry,
    readout: Readout,
) -> String {
    let p = split.provenance();
    let mut h = Sha256::new();
    h.update(p.images_sha256.as_bytes());
    h.update(p.labels_sha256.as_bytes());
    for &i in split.source_indices() {
        h.update((i as u64).to_le_bytes());
    }
    h.update(filter.spec().digest().as_bytes());
    for t in filter.theta() {
        h.update(t.to_bits().to_le_bytes());
    }
    let g = geometry;
    for v in [g.kernel_m, g.kernel_n, g.stride, g.padding, g.dilation] {
        h.update((v as u64).to_le_bytes());
    }
    match readout {
        Readout::Analytic => h.update(b"analytic"),
        Readout::Shots { shots, seed } => {
            h.update(b"shots");
            h.update(shots.to_le_bytes());
            h.update(seed.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

/// Directory of feature files named by their cache key.
#[derive(Debug, Clone)]
pub struct FeatureCache {
    dir: PathBuf,
}

impl FeatureCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FeatureCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.qdcf"))
    }

    pub fn load(&self, key: &str) -> Result<Option<Vec<FeatureTensor>>> {
        let path = self.path(key);
        if !path.exists() {
            return Ok(None);
        }
        read_tensors(&path).map(Some)
    }

    pub fn store(&self, key: &str, tensors: &[FeatureTensor]) -> Result<()> {
        std::fs::create_dir_all(&self.dir)
            .map_err(|e| crate::Error::io(format!("creating {}", self.dir.display()), e))?;
        // write then rename so a killed run never leaves a half file under the key
        let tmp = self.dir.join(format!("{key}.tmp"));
        write_tensors(&tmp, tensors)?;
        let path = self.path(key);
        std::fs::rename(&tmp, &path)
            .map_err(|e| crate::Error::io(format!("renaming into {}", path.display()), e))
    }
}
